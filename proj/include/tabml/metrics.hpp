#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tabml {

struct ConfusionCounts {
  long long tp = 0;
  long long tn = 0;
  long long fp = 0;
  long long fn = 0;

  long long total() const noexcept { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// p >= threshold counts as a positive prediction.
ConfusionCounts confusion(std::span<const double> probabilities, std::span<const int> labels, double threshold = 0.5);

enum class Metric {
  tp, tn, fp, fn,
  accuracy, balanced_accuracy, f1, sensitivity, specificity, precision,
  roc_auc, prc_auc, aps, npv, lr_plus, lr_minus,
};
inline constexpr std::size_t kMetricCount = 16;

const std::array<std::string_view, kMetricCount>& metric_names();
std::string_view metric_name(Metric m);
std::optional<Metric> metric_from_name(std::string_view name);

/// 0/0 gives `undefined`; x/0 with x > 0 gives `infinite`. The stored value
/// is 0 in both cases so tables stay numeric.
enum class MetricFlag { none, undefined, infinite };

struct MetricSet {
  std::array<double, kMetricCount> values{};
  std::array<MetricFlag, kMetricCount> flags{};

  double operator[](Metric m) const { return values[static_cast<std::size_t>(m)]; }
  MetricFlag flag(Metric m) const { return flags[static_cast<std::size_t>(m)]; }
  /// "name:flag" pairs joined by ';', empty when nothing is flagged.
  std::string flag_text() const;
};

MetricSet metric_set(const ConfusionCounts& counts, std::span<const double> probabilities, std::span<const int> labels);

enum class CurveKind { roc, prc };

struct Curve {
  CurveKind kind = CurveKind::roc;
  /// ROC: (false positive rate, true positive rate) from (0,0) to (1,1).
  /// PRC: (recall, precision) starting at (0,1).
  std::vector<std::pair<double, double>> points;
  double auc = 0.0;
  /// ROC: 0.5. PRC: positive class fraction.
  double no_skill = 0.0;
};

/// Thresholds are the unique probabilities, descending. Both require both
/// classes to be present.
Curve roc_curve(std::span<const double> probabilities, std::span<const int> labels);
Curve prc_curve(std::span<const double> probabilities, std::span<const int> labels);

/// Trapezoid area computed in integer arithmetic; equals the fraction of
/// (positive, negative) pairs ranked correctly plus half the ties.
double roc_auc(std::span<const double> probabilities, std::span<const int> labels);
/// Sum over thresholds of (R_k - R_{k-1}) * P_k.
double average_precision(std::span<const double> probabilities, std::span<const int> labels);

}  // namespace tabml
