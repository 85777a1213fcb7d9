#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tabml/metrics.hpp"
#include "tabml/models.hpp"
#include "tabml/stats.hpp"

namespace tabml {

/// Metrics of one model on one held-out fold.
struct FoldRecord {
  std::string algorithm;
  int fold = 0;
  MetricSet metrics;
};

struct Aggregate {
  double mean = 0.0;
  double median = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single fold.
  double sd = 0.0;
};

struct AggregateTable {
  /// In first-appearance order of the fold records.
  std::vector<std::string> algorithms;
  std::vector<std::array<Aggregate, kMetricCount>> rows;

  const Aggregate& at(const std::string& algorithm, Metric m) const;
};

AggregateTable aggregate(const std::vector<FoldRecord>& records);
/// algorithm,metric,mean,median,sd
std::string to_csv(const AggregateTable& table);

/// Per-fold values of one metric for one algorithm, in fold order.
std::vector<double> fold_values(const std::vector<FoldRecord>& records, const std::string& algorithm, Metric m);

/// Probability-based metric on a labelled set.
double evaluate_metric(Metric m, std::span<const double> probabilities, std::span<const int> labels);

/// Baseline metric minus the mean metric after permuting each feature of
/// the model's subset (seeded per feature and repeat). Returned in
/// `all_features` order; features outside the subset score exactly 0.
std::vector<double> permutation_importance(const TrainedModel& model, const Dataset& test,
                                           const std::vector<std::string>& all_features, Metric metric,
                                           int n_repeats, std::uint64_t seed);

/// Per algorithm: min-max normalize (an all-equal vector becomes zeros),
/// multiply by the algorithm's weight, then sum across algorithms.
std::vector<double> composite_importance(const std::vector<std::vector<double>>& per_algorithm,
                                         const std::vector<double>& weights);

struct KruskalFinding {
  Metric metric = Metric::balanced_accuracy;
  stats::TestResult result;
  bool significant = false;
};

struct PairwiseFinding {
  Metric metric = Metric::balanced_accuracy;
  std::string a, b;
  stats::TestResult mann_whitney;
  stats::TestResult wilcoxon;
};

struct SignificanceFindings {
  std::vector<KruskalFinding> kruskal;
  /// Only for metrics whose Kruskal-Wallis p is below alpha.
  std::vector<PairwiseFinding> pairwise;
};

/// Kruskal-Wallis per metric across the named groups; pairwise Mann-Whitney
/// and Wilcoxon tests are run only where that gate opens. `values[g][m]`
/// holds group g's per-fold values of metric m.
SignificanceFindings significance_workflow(const std::vector<std::string>& groups,
                                           const std::vector<std::array<std::vector<double>, kMetricCount>>& values,
                                           double alpha = 0.05);

/// Collects per-fold metric vectors for the workflow from fold records.
std::vector<std::array<std::vector<double>, kMetricCount>> group_values(const std::vector<FoldRecord>& records,
                                                                       const std::vector<std::string>& algorithms);

/// metric,statistic,p_value,significant,degenerate
std::string kruskal_to_csv(const SignificanceFindings& findings);
/// metric,a,b,mwu_u,mwu_p,wilcoxon_w,wilcoxon_p,wilcoxon_degenerate
std::string pairwise_to_csv(const SignificanceFindings& findings);

}  // namespace tabml
