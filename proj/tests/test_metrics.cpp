#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tabml/common.hpp"
#include "tabml/metrics.hpp"

using namespace tabml;

namespace {

double pairwise_auc(const std::vector<double>& p, const std::vector<int>& y) {
  double good = 0, pairs = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      if (p[i] > p[j]) good += 1;
      else if (p[i] == p[j]) good += 0.5;
    }
  return good / pairs;
}

}  // namespace

TEST_CASE("confusion conventions") {
  CHECK(confusion(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == ConfusionCounts{1, 1, 0, 0});
  CHECK(confusion(std::vector<double>{0.5}, std::vector<int>{0}).fp == 1);
  CHECK(confusion(std::vector<double>(7, 0.9), std::vector<int>(7, 0)).fp == 7);
  CHECK_THROWS_AS(confusion(std::vector<double>{}, std::vector<int>{}), Error);
}

TEST_CASE("metric formulas") {
  // tp=3 fn=1 tn=2 fp=2
  std::vector<double> p{0.9, 0.8, 0.7, 0.2, 0.1, 0.3, 0.6, 0.6};
  std::vector<int> y{1, 1, 1, 1, 0, 0, 0, 0};
  auto k = confusion(p, y);
  CHECK(k == ConfusionCounts{3, 2, 2, 1});
  auto m = metric_set(k, p, y);
  CHECK(m[Metric::sensitivity] == 0.75);
  CHECK(m[Metric::specificity] == 0.5);
  CHECK(m[Metric::balanced_accuracy] == 0.625);
  CHECK(m[Metric::precision] == 0.6);
  CHECK(m[Metric::npv] == doctest::Approx(2.0 / 3.0));
  CHECK(m[Metric::f1] == doctest::Approx(2 * 0.6 * 0.75 / 1.35));
  CHECK(m[Metric::lr_plus] == 1.5);
  CHECK(m[Metric::lr_minus] == 0.5);
  CHECK(m.flag_text().empty());
}

TEST_CASE("perfect separation and 0/0 conventions") {
  std::vector<double> p{0.9, 0.8, 0.2, 0.1};
  std::vector<int> y{1, 1, 0, 0};
  auto m = metric_set(confusion(p, y), p, y);
  for (auto id : {Metric::accuracy, Metric::balanced_accuracy, Metric::f1, Metric::sensitivity, Metric::specificity,
                  Metric::precision, Metric::roc_auc, Metric::prc_auc, Metric::aps, Metric::npv})
    CHECK(m[id] == 1.0);
  CHECK(m[Metric::lr_minus] == 0.0);
  CHECK(m.flag(Metric::lr_plus) == MetricFlag::infinite);

  std::vector<double> low{0.1, 0.2, 0.3};
  std::vector<int> yy{1, 0, 0};
  auto z = metric_set(confusion(low, yy), low, yy);
  CHECK(z[Metric::precision] == 0.0);
  CHECK(z.flag(Metric::precision) == MetricFlag::undefined);
  for (double v : z.values) CHECK(std::isfinite(v));
}

TEST_CASE("curves") {
  std::vector<double> p{0.9, 0.8, 0.2, 0.1};
  std::vector<int> y{1, 1, 0, 0};
  auto roc = roc_curve(p, y);
  CHECK(roc.points.front() == std::pair(0.0, 0.0));
  CHECK(roc.points.back() == std::pair(1.0, 1.0));
  CHECK(roc.auc == 1.0);
  auto prc = prc_curve(p, y);
  CHECK(prc.auc == 1.0);
  CHECK(prc.no_skill == 0.5);
  CHECK_THROWS_AS(roc_curve(p, std::vector<int>(4, 1)), Error);
}

TEST_CASE("ROC AUC equals the pairwise oracle exactly") {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(29);
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<double>(rng.below(8)) / 8.0;
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(roc_auc(p, y) == pairwise_auc(p, y));
  }
}

TEST_CASE("random scores give AUC near 0.5") {
  Rng rng(99);
  std::vector<double> p(10000);
  std::vector<int> y(10000);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = rng.uniform();
    y[i] = static_cast<int>(i % 2);
  }
  CHECK(std::abs(roc_auc(p, y) - 0.5) <= 0.02);
}

TEST_CASE("APS equals step-integrated PRC area") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 4 + rng.below(40);
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<double>(rng.below(10)) / 10.0;
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(prc_curve(p, y).auc == doctest::Approx(average_precision(p, y)).epsilon(1e-12));
  }
}
