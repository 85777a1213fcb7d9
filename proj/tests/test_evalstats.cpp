#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "tabml/evalstats.hpp"

using namespace tabml;

namespace {

Dataset two_features(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.name = "e";
  d.features = {{"signal", FeatureKind::quantitative}, {"noise", FeatureKind::quantitative}};
  d.values = Matrix(n, 2);
  d.missing.assign(n * 2, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    d.outcome.push_back(y);
    d.values(i, 0) = y;
    d.values(i, 1) = rng.normal();
  }
  return d;
}

FoldRecord record(const std::string& a, int fold, double ba) {
  FoldRecord r;
  r.algorithm = a;
  r.fold = fold;
  r.metrics.values[static_cast<std::size_t>(Metric::balanced_accuracy)] = ba;
  r.metrics.values[static_cast<std::size_t>(Metric::roc_auc)] = ba / 2 + 0.5;
  return r;
}

}  // namespace

TEST_CASE("aggregates match a naive pass") {
  Rng rng(1);
  std::vector<FoldRecord> recs;
  for (const auto* a : {"DT", "NB"})
    for (int f = 9; f >= 0; --f) recs.push_back(record(a, f, rng.uniform()));
  const auto t = aggregate(recs);
  REQUIRE(t.algorithms == std::vector<std::string>{"DT", "NB"});
  for (const auto& a : t.algorithms) {
    std::vector<double> v(10);
    for (const auto& r : recs)
      if (r.algorithm == a) v[static_cast<std::size_t>(r.fold)] = r.metrics[Metric::balanced_accuracy];
    double s = 0;
    for (double x : v) s += x;
    const double m = s / 10;
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const auto& agg = t.at(a, Metric::balanced_accuracy);
    CHECK(std::abs(agg.mean - m) <= 1e-12);
    CHECK(std::abs(agg.sd - std::sqrt(ss / 9)) <= 1e-12);
    CHECK(std::abs(agg.median - (sorted[4] + sorted[5]) / 2) <= 1e-12);
    CHECK(agg.median >= sorted.front());
    CHECK(agg.median <= sorted.back());
    CHECK(fold_values(recs, a, Metric::balanced_accuracy) == v);
  }
  const auto csv = to_csv(t);
  CHECK(csv.rfind("algorithm,metric,mean,median,sd\nDT,tp,0,0,0\n", 0) == 0);
}

TEST_CASE("composite importance") {
  const std::vector<double> v{2, 4, 6, 10};
  const std::vector<double> norm{0, 0.25, 0.5, 1};
  CHECK(composite_importance({v}, {1.0}) == norm);
  const auto two = composite_importance({v, v}, {0.9, 0.5});
  for (std::size_t j = 0; j < v.size(); ++j) CHECK(two[j] == doctest::Approx(1.4 * norm[j]));
  const auto zero = composite_importance({v, {9, 1, 1, 1}}, {1.0, 0.0});
  CHECK(zero == norm);
  CHECK(composite_importance({{3, 3, 3}}, {1.0}) == std::vector<double>{0, 0, 0});

  // Affine rescaling of one algorithm's raw scores changes nothing.
  const std::vector<double> w{0.3, -1.0, 0.1, 0.2};
  std::vector<double> v_affine;
  for (double x : v) v_affine.push_back(7.5 * x - 3.0);
  CHECK(composite_importance({v, w}, {0.8, 0.6}) == composite_importance({v_affine, w}, {0.8, 0.6}));
  // Ranking is independent of algorithm order.
  const auto ab = composite_importance({v, w}, {0.8, 0.6});
  const auto ba = composite_importance({w, v}, {0.6, 0.8});
  for (std::size_t j = 0; j < v.size(); ++j) CHECK(ab[j] == doctest::Approx(ba[j]).epsilon(1e-15));
}

TEST_CASE("permutation importance: ignored feature scores zero") {
  const auto d = two_features(60, 2);
  auto lr = make_classifier("LR");
  lr->load_parameters({{"weights", {3.0, 0.0}}, {"intercept", -1.5}});
  TrainedModel m;
  m.algorithm_id = "LR";
  m.feature_subset = {"signal", "noise"};
  m.classifier = std::move(lr);
  const auto s = permutation_importance(m, d, {"extra", "signal", "noise"}, Metric::balanced_accuracy, 5, 1);
  CHECK(s[0] == 0.0);
  CHECK(s[1] > 0.0);
  CHECK(s[2] == 0.0);
}

TEST_CASE("permutation importance of a perfectly predictive split feature") {
  // Exact expectation: with the predictor equal to a permuted copy of the
  // labels, enumerate every permutation at n = 6 to get the mean balanced
  // accuracy after shuffling.
  std::vector<int> labels{0, 1, 0, 1, 0, 1};
  std::vector<std::size_t> perm(6);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double total = 0, count = 0;
  do {
    double tp = 0, tn = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      const int pred = labels[perm[i]];
      tp += pred == 1 && labels[i] == 1;
      tn += pred == 0 && labels[i] == 0;
    }
    total += 0.5 * (tp / 3 + tn / 3);
    count += 1;
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double expected_after = total / count;
  CHECK(expected_after == doctest::Approx(0.5).epsilon(1e-12));

  const auto d = two_features(200, 3);
  const auto m = fit_model("DT", {}, d, 1);
  const auto s = permutation_importance(m, d, d.feature_names(), Metric::balanced_accuracy, 10, 4);
  CHECK(s[0] >= 0.4);
  CHECK(s[0] == doctest::Approx(1.0 - expected_after).epsilon(0.1));
  CHECK(s[1] == 0.0);
  CHECK(s == permutation_importance(m, d, d.feature_names(), Metric::balanced_accuracy, 10, 4));
}

TEST_CASE("more repeats reduce the variance of the estimate") {
  const auto d = two_features(40, 5);
  const auto m = fit_model("DT", {}, d, 1);
  auto spread = [&](int repeats) {
    std::vector<double> v;
    for (std::uint64_t seed = 0; seed < 40; ++seed)
      v.push_back(permutation_importance(m, d, d.feature_names(), Metric::balanced_accuracy, repeats, seed)[0]);
    return sample_sd(v);
  };
  CHECK(spread(10) < spread(1));
}

TEST_CASE("permutation importance rejects a single-class fold") {
  auto d = two_features(20, 1);
  const auto m = fit_model("DT", {}, d, 1);
  std::fill(d.outcome.begin(), d.outcome.end(), 1);
  CHECK_THROWS_AS(permutation_importance(m, d, d.feature_names(), Metric::balanced_accuracy, 2, 1), Error);
}

TEST_CASE("significance gate closed: no pairwise tests") {
  std::vector<FoldRecord> recs;
  for (int f = 0; f < 10; ++f) {
    recs.push_back(record("A", f, 0.5 + 0.01 * f));
    recs.push_back(record("B", f, 0.505 + 0.01 * ((f + 3) % 10)));
  }
  const auto groups = std::vector<std::string>{"A", "B"};
  const auto findings = significance_workflow(groups, group_values(recs, groups));
  CHECK(findings.kruskal.size() == kMetricCount);
  for (const auto& k : findings.kruskal) CHECK_FALSE(k.significant);
  CHECK(findings.pairwise.empty());
  CHECK(pairwise_to_csv(findings) == "metric,a,b,mwu_u,mwu_p,wilcoxon_w,wilcoxon_p,wilcoxon_degenerate\n");
}

TEST_CASE("planted separation is flagged") {
  std::vector<FoldRecord> recs;
  for (int f = 0; f < 10; ++f) {
    recs.push_back(record("high", f, 0.9 + 0.001 * f));
    recs.push_back(record("low", f, 0.6 + 0.001 * f));
    recs.push_back(record("mid", f, 0.6 + 0.0015 * f));
  }
  const auto groups = std::vector<std::string>{"high", "low", "mid"};
  const auto findings = significance_workflow(groups, group_values(recs, groups), 0.05);
  // Exhaustive oracle: U = 100 of 100 pairs happens in 1 of C(20,10) label
  // arrangements per tail.
  double arrangements = 0, extreme = 0;
  std::vector<double> pooled;
  for (int f = 0; f < 10; ++f) pooled.push_back(0.9 + 0.001 * f);
  for (int f = 0; f < 10; ++f) pooled.push_back(0.6 + 0.001 * f);
  oracle::for_each_assignment({10, 10}, [&](const std::vector<int>& labels) {
    const auto g = oracle::split_by(pooled, labels, 2);
    const double u = oracle::mwu_u(g[0], g[1]);
    arrangements += 1;
    if (u == 100 || u == 0) extreme += 1;
  });
  const double exact_p = extreme / arrangements;
  CHECK(exact_p < 0.05);

  bool saw = false;
  for (const auto& p : findings.pairwise) {
    if (p.metric != Metric::balanced_accuracy || p.a != "high" || p.b != "low") continue;
    saw = true;
    CHECK(p.mann_whitney.statistic == 100.0);
    CHECK(p.mann_whitney.p_value < 0.05);
    CHECK(p.wilcoxon.p_value < 0.05);
  }
  CHECK(saw);
  for (const auto& p : findings.pairwise) CHECK(p.metric != Metric::tp);
}

TEST_CASE("Wilcoxon on identical folds is degenerate") {
  std::vector<FoldRecord> recs;
  for (int f = 0; f < 10; ++f) {
    recs.push_back(record("A", f, 0.9));
    recs.push_back(record("B", f, 0.9));
    recs.push_back(record("C", f, 0.1 + 0.01 * f));
  }
  const auto groups = std::vector<std::string>{"A", "B", "C"};
  const auto findings = significance_workflow(groups, group_values(recs, groups));
  bool saw = false;
  for (const auto& p : findings.pairwise)
    if (p.a == "A" && p.b == "B" && p.metric == Metric::balanced_accuracy) {
      saw = true;
      CHECK(p.wilcoxon.degenerate);
      CHECK(p.wilcoxon.p_value == 1.0);
    }
  CHECK(saw);
}
