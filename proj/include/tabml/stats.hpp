#pragma once

#include <span>
#include <vector>

namespace tabml::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  /// Set when the test had nothing to work with (no rank variation, all
  /// paired differences zero, ...). p_value is 1 in that case.
  bool degenerate = false;
};

/// 1-based ranks; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Sum over tie groups of (t^3 - t).
double tie_term(std::span<const double> values);

double normal_sf(double z);
/// Upper tail of the chi-square distribution.
double chi2_sf(double x, double df);

/// U is the statistic of the first sample: R_a - n_a (n_a + 1) / 2.
/// Two-sided p from the normal approximation with tie and continuity
/// corrections.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// W = min(W+, W-) over nonzero paired differences; zero differences are
/// discarded. Normal approximation with tie and continuity corrections.
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// Tie-corrected H; p from chi-square with (groups - 1) degrees of freedom.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

/// Pearson chi-square test of independence between a categorical feature
/// and a binary outcome (no continuity correction).
TestResult chi_square_independence(std::span<const double> feature, std::span<const int> outcome);

/// Correlation helpers return nullopt-like NaN when undefined.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);
double cramers_v(std::span<const double> x, std::span<const double> y);
/// Rank-biserial correlation of `values` between the two levels of
/// `binary` (higher level minus lower level, scaled to [-1, 1]).
double rank_biserial(std::span<const double> binary, std::span<const double> values);

}  // namespace tabml::stats
