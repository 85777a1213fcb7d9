#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "tabml/dataset.hpp"

using namespace tabml;

namespace {

DatasetConfig cfg() { return DatasetConfig{}; }

}  // namespace

TEST_CASE("header-only file gives an empty but valid dataset") {
  auto d = parse_csv("a,b,Class\n", cfg());
  CHECK(d.n_instances() == 0);
  CHECK(d.n_features() == 2);
  d.validate();
}

TEST_CASE("missing token and empty cells are missing") {
  auto d = parse_csv("a,b,Class\n1,NA,0\n,2.5,1\n3,4,NA\n", cfg());
  CHECK(d.n_instances() == 3);
  CHECK(d.is_missing(0, 1));
  CHECK(d.is_missing(1, 0));
  CHECK_FALSE(d.is_missing(2, 0));
  CHECK(d.missing_count() == 2);
  CHECK(d.outcome[2] == -1);
  d.validate();
}

TEST_CASE("parse errors name row and column") {
  try {
    parse_csv("a,b,Class\n1,2,0\n1,x,1\n", cfg());
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("'b'") != std::string::npos);
  }
}

TEST_CASE("config errors for header problems") {
  auto kind_of = [](const char* text) {
    try {
      parse_csv(text, DatasetConfig{});
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::internal;
  };
  CHECK(kind_of("a,a,Class\n1,2,0\n") == ErrorKind::config);
  CHECK(kind_of("a,b,Outcome\n1,2,0\n") == ErrorKind::config);
}

TEST_CASE("quoted fields and id/match columns") {
  DatasetConfig c;
  c.instance_id = "id";
  c.match_group = "grp";
  auto d = parse_csv("id,\"x,1\",grp,Class\r\n\"p \"\"one\"\"\",1.5,7,1\r\np2,2,7,0\r\n", c);
  CHECK(d.features.size() == 1);
  CHECK(d.features[0].name == "x,1");
  CHECK(d.instance_ids[0] == "p \"one\"");
  CHECK(d.match_group == std::vector<long long>{7, 7});
  auto again = parse_csv(to_csv(d, c), c);
  CHECK(again.instance_ids == d.instance_ids);
  CHECK(again.features[0].name == "x,1");
}

TEST_CASE("write/load round-trips every cell and mask bit-identically") {
  Rng rng(7);
  Dataset d;
  d.name = "r";
  for (int j = 0; j < 4; ++j) d.features.push_back({"f" + std::to_string(j)});
  const std::size_t n = 60;
  d.values = Matrix(n, 4);
  d.missing.assign(n * 4, 0);
  d.outcome.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.outcome[i] = static_cast<int>(rng.below(2));
    for (std::size_t j = 0; j < 4; ++j) {
      double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.between(-8, 8)));
      if (rng.bernoulli(0.1)) v = kNaN;
      d.set_cell(i, j, v);
    }
  }
  auto back = parse_csv(to_csv(d, cfg()), cfg(), "r");
  CHECK(back == d);
  for (std::size_t k = 0; k < d.values.data().size(); ++k) {
    const double a = d.values.data()[k];
    const double b = back.values.data()[k];
    CHECK((std::isnan(a) ? std::isnan(b) : std::memcmp(&a, &b, sizeof a) == 0));
  }
}

TEST_CASE("type inference and overrides") {
  std::string text = "small,big,forced,Class\n";
  for (int i = 0; i < 150; ++i)
    text += std::to_string(i % 3) + "," + std::to_string(i) + "," + std::to_string(i % 3) + "," +
            std::to_string(i % 2) + "\n";
  auto d = parse_csv(text, cfg());
  auto meta = infer_feature_types(d, 10, {}, {"forced"});
  CHECK(meta[0].kind == FeatureKind::categorical);
  CHECK(meta[0].observed_unique_count == 3);
  CHECK(meta[1].kind == FeatureKind::quantitative);
  CHECK(meta[1].observed_min == 0.0);
  CHECK(meta[1].observed_max == 149.0);
  CHECK(meta[2].kind == FeatureKind::quantitative);
  CHECK_THROWS_AS(infer_feature_types(d, 10, {"nope"}), Error);
  CHECK_THROWS_AS(infer_feature_types(d, 1), Error);
}

TEST_CASE("clean drops missing outcomes and excluded columns only") {
  std::string text = "Age,Sex,x,Class\n";
  for (int i = 0; i < 100; ++i) text += "1,0," + std::to_string(i) + "," + (i < 3 ? "NA" : std::to_string(i % 2)) + "\n";
  auto d = parse_csv(text, cfg());
  auto c = clean(d);
  CHECK(c.n_instances() == 97);
  auto c2 = clean(d, {"Age", "Sex"});
  CHECK(c2.n_features() == 1);
  CHECK(clean(c2) == c2);
  CHECK(clean(clean(d)) == clean(d));
}

TEST_CASE("eda summary") {
  std::string text = "q,q2,c,k,Class\n";
  for (int i = 0; i < 40; ++i)
    text += std::to_string(i) + "," + std::to_string(i) + "," + std::to_string(i % 2) + ",5," +
            std::to_string(i % 2) + "\n";
  auto d = with_feature_types(parse_csv(text, cfg()), 10);
  auto s = eda_summary(d);
  CHECK(s.class_counts.first + s.class_counts.second == s.instance_count);
  for (std::size_t j = 0; j < 4; ++j) CHECK(s.feature_correlations(j, j) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.feature_correlations(0, 1) == doctest::Approx(1.0));
  CHECK(s.feature_correlations(0, 3) == 0.0);
  CHECK_FALSE(s.undefined_correlations.empty());
  for (const auto& u : s.univariate_results) {
    CHECK(u.p_value >= 0.0);
    CHECK(u.p_value <= 1.0);
    CHECK(u.statistic >= 0.0);
  }
  CHECK(s.univariate_results[2].test_name == "chi_square");
  CHECK(s.univariate_results[0].test_name == "mann_whitney_u");
}

TEST_CASE("quantitative feature identical across classes gives Mann-Whitney p near 1") {
  auto d = with_feature_types(parse_csv("x,Class\n1,0\n2,0\n3,0\n4,0\n1,1\n2,1\n3,1\n4,1\n", cfg()), 2);
  auto s = eda_summary(d);
  CHECK(s.univariate_results[0].p_value == doctest::Approx(1.0));
}
