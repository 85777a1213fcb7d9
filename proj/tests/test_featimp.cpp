#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "tabml/featimp.hpp"

using namespace tabml;

namespace {

Dataset from_rows(const std::vector<std::vector<double>>& rows, const std::vector<int>& y,
                  const std::vector<FeatureKind>& kinds) {
  Dataset d;
  d.name = "fi";
  const std::size_t f = kinds.size();
  for (std::size_t j = 0; j < f; ++j) d.features.push_back({"f" + std::to_string(j), kinds[j]});
  d.values = Matrix(rows.size(), f);
  d.missing.assign(rows.size() * f, 0);
  d.outcome = y;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < f; ++j) d.values(i, j) = rows[i][j];
  return d;
}

/// Straight transcription of the MultiSURF scoring rule.
std::vector<double> multisurf_oracle(const Dataset& d) {
  const std::size_t n = d.n_instances(), f = d.n_features();
  std::vector<double> range(f);
  for (std::size_t k = 0; k < f; ++k) {
    auto col = d.values.column(k);
    range[k] = *std::max_element(col.begin(), col.end()) - *std::min_element(col.begin(), col.end());
  }
  auto diff = [&](std::size_t k, std::size_t a, std::size_t b) {
    if (d.features[k].kind == FeatureKind::categorical) return d.values(a, k) != d.values(b, k) ? 1.0 : 0.0;
    if (range[k] == 0.0) return 0.0;
    return std::abs(d.values(a, k) - d.values(b, k)) / range[k];
  };
  auto distance = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t k = 0; k < f; ++k) s += diff(k, a, b);
    return s;
  };
  std::vector<double> score(f, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum += distance(i, j);
    const double mu = sum / (n - 1);
    double ss = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) ss += (distance(i, j) - mu) * (distance(i, j) - mu);
    const double sigma = std::sqrt(ss / (n - 1));
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !(distance(i, j) < mu - sigma / 2)) continue;
      for (std::size_t k = 0; k < f; ++k) {
        if (d.outcome[i] == d.outcome[j]) score[k] -= diff(k, i, j);
        else score[k] += diff(k, i, j);
      }
    }
  }
  for (auto& s : score) s /= n;
  return score;
}

Dataset random_mixed(std::size_t n, std::size_t f, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureKind> kinds;
  for (std::size_t j = 0; j < f; ++j) kinds.push_back(j % 3 == 0 ? FeatureKind::categorical : FeatureKind::quantitative);
  std::vector<std::vector<double>> rows(n, std::vector<double>(f));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(rng.below(2));
    for (std::size_t j = 0; j < f; ++j)
      rows[i][j] = kinds[j] == FeatureKind::categorical ? static_cast<double>(rng.below(3)) : rng.normal() + 0.5 * y[i];
  }
  return from_rows(rows, y, kinds);
}

Dataset xor_data(std::size_t n, std::size_t f, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows(n, std::vector<double>(f));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) rows[i][j] = static_cast<double>(rng.below(2));
    y[i] = static_cast<int>(rows[i][0]) ^ static_cast<int>(rows[i][1]);
  }
  return from_rows(rows, y, std::vector<FeatureKind>(f, FeatureKind::categorical));
}

/// Exact plug-in MI from a contingency table, written independently.
double mi_oracle(const std::vector<int>& x, const std::vector<int>& y) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> px, py;
  for (std::size_t i = 0; i < x.size(); ++i) {
    joint[{x[i], y[i]}] += 1;
    px[x[i]] += 1;
    py[y[i]] += 1;
  }
  const double n = static_cast<double>(x.size());
  double mi = 0;
  for (auto& [k, c] : joint) mi += (c / n) * std::log((c / n) / ((px[k.first] / n) * (py[k.second] / n)));
  return mi;
}

}  // namespace

TEST_CASE("MI of a class-identical binary feature is ln 2") {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    rows.push_back({static_cast<double>(i % 2), 3.0});
    y.push_back(i % 2);
  }
  auto mi = mutual_info(from_rows(rows, y, {FeatureKind::categorical, FeatureKind::quantitative}));
  CHECK(mi[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(mi[1] == 0.0);
}

TEST_CASE("MI on XOR features matches the contingency oracle and is small") {
  auto d = xor_data(400, 2, 8);
  auto mi = mutual_info(d);
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<int> x;
    for (std::size_t i = 0; i < 400; ++i) x.push_back(static_cast<int>(d.values(i, j)));
    CHECK(mi[j] == doctest::Approx(mi_oracle(x, d.outcome)).epsilon(1e-12));
    CHECK(mi[j] <= 0.01);
  }
}

TEST_CASE("MI is invariant to row order and category relabelling") {
  auto d = random_mixed(150, 6, 2);
  auto base = mutual_info(d);
  std::vector<std::size_t> perm(150);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(4);
  rng.shuffle(perm);
  auto shuffled = mutual_info(d.select_rows(perm));
  for (std::size_t j = 0; j < base.size(); ++j) CHECK(shuffled[j] == doctest::Approx(base[j]).epsilon(1e-12));
  auto relabelled = d;
  for (std::size_t i = 0; i < 150; ++i) relabelled.values(i, 0) = 10.0 - 3.0 * d.values(i, 0);
  CHECK(mutual_info(relabelled)[0] == doctest::Approx(base[0]).epsilon(1e-12));
}

TEST_CASE("optimized MultiSURF equals the literal oracle exactly") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto d = random_mixed(40 + 30 * seed, 7, seed);
    auto fast = multisurf(d);
    auto slow = multisurf_oracle(d);
    for (std::size_t k = 0; k < fast.size(); ++k) CHECK(fast[k] == slow[k]);
  }
}

TEST_CASE("MultiSURF: class-equal feature scores highest, constant data scores zero") {
  Rng rng(12);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    const int c = static_cast<int>(rng.below(2));
    y.push_back(c);
    std::vector<double> r{static_cast<double>(c)};
    for (int j = 0; j < 5; ++j) r.push_back(rng.normal());
    rows.push_back(r);
  }
  std::vector<FeatureKind> kinds(6, FeatureKind::quantitative);
  kinds[0] = FeatureKind::categorical;
  auto s = multisurf(from_rows(rows, y, kinds));
  CHECK(std::max_element(s.begin(), s.end()) - s.begin() == 0);

  std::vector<std::vector<double>> flat(30, std::vector<double>(3, 1.0));
  std::vector<int> yy(30);
  for (int i = 0; i < 30; ++i) yy[i] = i % 2;
  for (double v : multisurf(from_rows(flat, yy, std::vector<FeatureKind>(3, FeatureKind::quantitative)))) CHECK(v == 0.0);
  CHECK_THROWS_AS(multisurf(from_rows({{1.0}, {2.0}}, {0, 1}, {FeatureKind::quantitative})), Error);
}

TEST_CASE("MultiSURF ranks a 2-way XOR pair top among 20 features") {
  auto d = xor_data(400, 20, 21);
  auto s = multisurf(d);
  auto order = rank_descending(s, d.feature_names());
  std::set<std::size_t> top(order.begin(), order.begin() + 2);
  CHECK(top == std::set<std::size_t>{0, 1});
}

TEST_CASE("MultiSURF is invariant to affine rescaling of quantitative features") {
  auto d = random_mixed(80, 6, 9);
  auto base = multisurf(d);
  auto scaled = d;
  for (std::size_t i = 0; i < 80; ++i) {
    scaled.values(i, 1) = 5.0 * d.values(i, 1) - 3.0;
    scaled.values(i, 2) = 0.01 * d.values(i, 2) + 100.0;
  }
  auto after = multisurf(scaled);
  for (std::size_t k = 0; k < base.size(); ++k) CHECK(std::abs(after[k] - base[k]) <= 1e-9);
}

TEST_CASE("MultiSURF instance cap subsamples deterministically") {
  auto d = random_mixed(300, 4, 3);
  std::size_t used = 0;
  auto a = multisurf(d, {100, 7}, &used);
  CHECK(used == 100);
  CHECK(a == multisurf(d, {100, 7}));
  multisurf(d, {2000, 7}, &used);
  CHECK(used == 300);
}

TEST_CASE("TuRF schedule") {
  auto d = random_mixed(60, 10, 5);
  std::vector<std::size_t> calls;
  ReliefFn relief = [&](const Dataset& sub) {
    calls.push_back(sub.n_features());
    return multisurf(sub);
  };
  auto one = turf(d, relief, 0.5, 1);
  CHECK(calls == std::vector<std::size_t>{10});
  auto plain = multisurf(d);
  CHECK(one.scores == plain);
  CHECK(one.ranking == rank_descending(plain, d.feature_names()));

  calls.clear();
  auto two = turf(d, relief, 0.5, 2);
  CHECK(calls == std::vector<std::size_t>{10, 5});
  std::size_t survivors = 0;
  for (int r : two.rounds_survived) survivors += r == 2;
  CHECK(survivors == 5);
  for (std::size_t k = 0; k < 5; ++k) CHECK(two.rounds_survived[two.ranking[k]] == 2);
  for (std::size_t k = 5; k < 10; ++k) CHECK(two.rounds_survived[two.ranking[k]] == 1);
  CHECK_THROWS_AS(turf(d, relief, 1.0, 2), Error);
  CHECK_THROWS_AS(turf(d, relief, 0.5, 0), Error);
  CHECK(turf_default_iterations(20000, 200) == 7);
  CHECK(turf_default_iterations(1 << 20, 1) == 10);
  CHECK(turf_default_iterations(50, 100) == 1);
}

TEST_CASE("TuRF keeps a planted univariate feature among 50 noise features") {
  Rng rng(31);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    const int c = static_cast<int>(rng.below(2));
    y.push_back(c);
    std::vector<double> r{c + 0.3 * rng.normal()};
    for (int j = 0; j < 50; ++j) r.push_back(rng.normal());
    rows.push_back(r);
  }
  auto d = from_rows(rows, y, std::vector<FeatureKind>(51, FeatureKind::quantitative));
  auto res = turf(d, [](const Dataset& s) { return multisurf(s); }, 0.5, 3);
  CHECK(res.rounds_survived[0] == 3);
  CHECK(res.ranking[0] == 0);
}

TEST_CASE("collective selection") {
  const std::vector<std::string> names{"A", "B", "C", "D", "E"};
  // MI: A > B > C; MS: C > D > A.
  const std::vector<double> mi{0.3, 0.2, 0.1, 0.0, 0.0};
  const std::vector<double> ms{0.05, -0.1, 0.2, 0.1, -0.3};
  CHECK(collective_select(names, mi, ms, 3) == std::vector<std::string>{"A", "C", "B"});
  CHECK(collective_select(names, mi, ms) == std::vector<std::string>{"A", "B", "C", "D"});
  CHECK(collective_select({"x"}, {0.2}, {-0.01}) == std::vector<std::string>{"x"});
  CHECK(collective_select({"x", "y"}, {0.0, 0.0}, {-1.0, 0.0}).empty());
  CHECK_THROWS_AS(collective_select(names, mi, ms, 0), Error);

  // Monotone in the cap, and the capped pool never exceeds the uncapped one.
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::string> nm;
    std::vector<double> a, b;
    for (int j = 0; j < 12; ++j) {
      nm.push_back("g" + std::to_string(j));
      a.push_back(rng.bernoulli(0.3) ? 0.0 : rng.uniform());
      b.push_back(rng.normal());
    }
    std::vector<std::string> prev;
    for (std::size_t cap = 1; cap <= 12; ++cap) {
      auto cur = collective_select(nm, a, b, cap);
      for (const auto& p : prev) CHECK(std::find(cur.begin(), cur.end(), p) != cur.end());
      std::set<std::string> uniq(cur.begin(), cur.end());
      CHECK(uniq.size() == cur.size());
      prev = cur;
    }
    CHECK(prev.size() == collective_select(nm, a, b).size());
  }
}

TEST_CASE("feature score CSV round-trip keeps selection order") {
  FeatureScores s;
  s.features = {"a", "b,c", "d"};
  s.mi_scores = {0.1, 0.0, 0.25};
  s.multisurf_scores = {-0.5, 0.125, 0.0};
  s.selected_features = {"d", "a"};
  auto back = feature_scores_from_csv(to_csv(s), 0);
  CHECK(back.features == s.features);
  CHECK(back.mi_scores == s.mi_scores);
  CHECK(back.multisurf_scores == s.multisurf_scores);
  CHECK(back.selected_features == s.selected_features);
}
