#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "tabml/partition.hpp"

using namespace tabml;

namespace {

Dataset labels_only(const std::vector<int>& y) {
  Dataset d;
  d.name = "p";
  d.features.push_back({"x"});
  d.values = Matrix(y.size(), 1);
  d.missing.assign(y.size(), 0);
  d.outcome = y;
  for (std::size_t i = 0; i < y.size(); ++i) d.values(i, 0) = static_cast<double>(i);
  return d;
}

void check_coverage(const CvSplit& s, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& f : s.folds) {
    CHECK(f.train.size() + f.test.size() == n);
    std::set<std::size_t> tr(f.train.begin(), f.train.end());
    for (auto i : f.test) {
      CHECK_FALSE(tr.count(i));
      ++seen[i];
    }
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

}  // namespace

TEST_CASE("stratified 1600 balanced, k=10 gives 80/80 folds") {
  std::vector<int> y(1600);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i < 800 ? 0 : 1;
  auto d = labels_only(y);
  auto s = make_cv(d, 10, CvStrategy::stratified, 42);
  check_coverage(s, 1600);
  for (const auto& f : s.folds) {
    CHECK(f.test.size() == 160);
    std::size_t pos = 0;
    for (auto i : f.test) pos += y[i];
    CHECK(pos == 80);
  }
  CHECK(make_cv(d, 10, CvStrategy::stratified, 42) == s);
}

TEST_CASE("stratified proportions and remainder sizes over many shapes") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 20 + rng.below(200);
    const int k = 2 + static_cast<int>(rng.below(9));
    std::vector<int> y(n);
    std::size_t n1 = 0;
    const double p = rng.uniform(0.15, 0.85);
    for (auto& v : y) n1 += (v = rng.bernoulli(p) ? 1 : 0);
    if (n1 < static_cast<std::size_t>(k) || n - n1 < static_cast<std::size_t>(k)) continue;
    auto s = make_cv(labels_only(y), k, CvStrategy::stratified, trial);
    check_coverage(s, n);
    const double global = static_cast<double>(n1) / static_cast<double>(n);
    for (std::size_t f = 0; f < s.folds.size(); ++f) {
      const auto& t = s.folds[f].test;
      const std::size_t expect = n / k + (f < n % static_cast<std::size_t>(k) ? 1 : 0);
      CHECK(t.size() == expect);
      std::size_t pos = 0;
      for (auto i : t) pos += y[i];
      CHECK(std::abs(static_cast<double>(pos) / static_cast<double>(t.size()) - global) <=
            1.0 / static_cast<double>(t.size()) + 1e-12);
    }
  }
}

TEST_CASE("stratified with a tiny class is an error naming the class") {
  std::vector<int> y(30, 0);
  y[0] = y[1] = 1;
  try {
    make_cv(labels_only(y), 5, CvStrategy::stratified, 1);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("class 1") != std::string::npos);
  }
}

TEST_CASE("random strategy and row-order sensitivity") {
  std::vector<int> y(50);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
  auto d = labels_only(y);
  auto a = make_cv(d, 5, CvStrategy::random, 9);
  check_coverage(a, 50);
  CHECK(a == make_cv(d, 5, CvStrategy::random, 9));
  CHECK_FALSE(a == make_cv(d, 5, CvStrategy::random, 10));
}

TEST_CASE("matched keeps groups together") {
  auto d = labels_only({0, 1, 0, 1});
  d.match_group = {1, 1, 2, 2};
  auto s = make_cv(d, 2, CvStrategy::matched, 5);
  check_coverage(s, 4);
  for (const auto& f : s.folds) {
    std::set<long long> test_groups, train_groups;
    for (auto i : f.test) test_groups.insert(d.match_group[i]);
    for (auto i : f.train) train_groups.insert(d.match_group[i]);
    for (auto g : test_groups) CHECK_FALSE(train_groups.count(g));
  }

  Rng rng(11);
  std::vector<int> y(300);
  for (auto& v : y) v = rng.bernoulli(0.4);
  auto big = labels_only(y);
  for (std::size_t i = 0; i < y.size(); ++i) big.match_group.push_back(static_cast<long long>(i / 3));
  auto m = make_cv(big, 10, CvStrategy::matched, 5);
  check_coverage(m, 300);
  for (const auto& f : m.folds) {
    std::set<long long> tg;
    for (auto i : f.test) tg.insert(big.match_group[i]);
    for (auto i : f.train) CHECK_FALSE(tg.count(big.match_group[i]));
    CHECK(f.test.size() >= 24);
    CHECK(f.test.size() <= 36);
  }
  CHECK_THROWS_AS(make_cv(labels_only({0, 1, 0, 1}), 2, CvStrategy::matched, 1), Error);
}

TEST_CASE("json round-trip") {
  std::vector<int> y(40);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
  auto s = make_cv(labels_only(y), 4, CvStrategy::stratified, 77);
  CHECK(cv_split_from_json(to_json(s)) == s);
}

TEST_CASE("preconditions") {
  auto d = labels_only({0, 1, 0, 1});
  CHECK_THROWS_AS(make_cv(d, 1, CvStrategy::random, 1), Error);
  CHECK_THROWS_AS(make_cv(d, 5, CvStrategy::random, 1), Error);
}
