#include "tabml/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "tabml/common.hpp"

namespace tabml {

ConfusionCounts confusion(std::span<const double> probabilities, std::span<const int> labels, double threshold) {
  require(!probabilities.empty(), "confusion: empty input");
  require(probabilities.size() == labels.size(), "confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] == 0 || labels[i] == 1, "confusion: labels must be 0 or 1");
    const bool predicted = probabilities[i] >= threshold;
    if (labels[i] == 1) (predicted ? c.tp : c.fn)++;
    else (predicted ? c.fp : c.tn)++;
  }
  return c;
}

const std::array<std::string_view, kMetricCount>& metric_names() {
  static const std::array<std::string_view, kMetricCount> names{
      "tp", "tn", "fp", "fn", "accuracy", "balanced_accuracy", "f1", "sensitivity",
      "specificity", "precision", "roc_auc", "prc_auc", "aps", "npv", "lr_plus", "lr_minus"};
  return names;
}

std::string_view metric_name(Metric m) { return metric_names()[static_cast<std::size_t>(m)]; }

std::optional<Metric> metric_from_name(std::string_view name) {
  const auto& names = metric_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Metric>(i);
  return std::nullopt;
}

std::string MetricSet::flag_text() const {
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    if (flags[i] == MetricFlag::none) continue;
    parts.push_back(std::string(metric_names()[i]) + ":" + (flags[i] == MetricFlag::undefined ? "undefined" : "infinite"));
  }
  return join(parts, ";");
}

namespace {

struct Sweep {
  // Cumulative counts after each unique threshold, descending.
  std::vector<long long> tp;
  std::vector<long long> fp;
  long long positives = 0;
  long long negatives = 0;
};

Sweep sweep(std::span<const double> probabilities, std::span<const int> labels) {
  require(probabilities.size() == labels.size(), "curve: length mismatch");
  Sweep s;
  for (int y : labels) {
    require(y == 0 || y == 1, "curve: labels must be 0 or 1");
    (y == 1 ? s.positives : s.negatives)++;
  }
  require(s.positives > 0 && s.negatives > 0, "curve: both classes must be present");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probabilities[a] > probabilities[b]; });
  long long tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (labels[order[k]] == 1 ? tp : fp)++;
    if (k + 1 == order.size() || probabilities[order[k + 1]] != probabilities[order[k]]) {
      s.tp.push_back(tp);
      s.fp.push_back(fp);
    }
  }
  return s;
}

double safe_div(double num, double den, MetricFlag& flag) {
  if (den != 0.0) return num / den;
  flag = num == 0.0 ? MetricFlag::undefined : MetricFlag::infinite;
  return 0.0;
}

}  // namespace

double roc_auc(std::span<const double> probabilities, std::span<const int> labels) {
  const auto s = sweep(probabilities, labels);
  // Twice the area in units of one (positive, negative) pair.
  long long twice = 0, prev_tp = 0, prev_fp = 0;
  for (std::size_t k = 0; k < s.tp.size(); ++k) {
    twice += (s.fp[k] - prev_fp) * (s.tp[k] + prev_tp);
    prev_tp = s.tp[k];
    prev_fp = s.fp[k];
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(s.positives) * static_cast<double>(s.negatives));
}

double average_precision(std::span<const double> probabilities, std::span<const int> labels) {
  const auto s = sweep(probabilities, labels);
  double ap = 0.0;
  long long prev_tp = 0;
  for (std::size_t k = 0; k < s.tp.size(); ++k) {
    const double recall_step = static_cast<double>(s.tp[k] - prev_tp) / static_cast<double>(s.positives);
    const double precision = static_cast<double>(s.tp[k]) / static_cast<double>(s.tp[k] + s.fp[k]);
    ap += recall_step * precision;
    prev_tp = s.tp[k];
  }
  return ap;
}

Curve roc_curve(std::span<const double> probabilities, std::span<const int> labels) {
  const auto s = sweep(probabilities, labels);
  Curve c;
  c.kind = CurveKind::roc;
  c.no_skill = 0.5;
  c.points.emplace_back(0.0, 0.0);
  for (std::size_t k = 0; k < s.tp.size(); ++k)
    c.points.emplace_back(static_cast<double>(s.fp[k]) / static_cast<double>(s.negatives),
                          static_cast<double>(s.tp[k]) / static_cast<double>(s.positives));
  c.auc = roc_auc(probabilities, labels);
  return c;
}

Curve prc_curve(std::span<const double> probabilities, std::span<const int> labels) {
  const auto s = sweep(probabilities, labels);
  Curve c;
  c.kind = CurveKind::prc;
  c.no_skill = static_cast<double>(s.positives) / static_cast<double>(s.positives + s.negatives);
  c.points.emplace_back(0.0, 1.0);
  for (std::size_t k = 0; k < s.tp.size(); ++k)
    c.points.emplace_back(static_cast<double>(s.tp[k]) / static_cast<double>(s.positives),
                          static_cast<double>(s.tp[k]) / static_cast<double>(s.tp[k] + s.fp[k]));
  // Step integration: each recall increment weighted by the precision
  // reached at its right end.
  double area = 0.0;
  for (std::size_t k = 1; k < c.points.size(); ++k)
    area += (c.points[k].first - c.points[k - 1].first) * c.points[k].second;
  c.auc = area;
  return c;
}

MetricSet metric_set(const ConfusionCounts& k, std::span<const double> probabilities, std::span<const int> labels) {
  require(static_cast<std::size_t>(k.total()) == labels.size(), "metric_set: counts do not match the label vector");
  MetricSet m;
  auto set = [&](Metric id, double num, double den) {
    const auto i = static_cast<std::size_t>(id);
    m.values[i] = safe_div(num, den, m.flags[i]);
  };
  const double tp = static_cast<double>(k.tp), tn = static_cast<double>(k.tn);
  const double fp = static_cast<double>(k.fp), fn = static_cast<double>(k.fn);
  m.values[static_cast<std::size_t>(Metric::tp)] = tp;
  m.values[static_cast<std::size_t>(Metric::tn)] = tn;
  m.values[static_cast<std::size_t>(Metric::fp)] = fp;
  m.values[static_cast<std::size_t>(Metric::fn)] = fn;
  set(Metric::accuracy, tp + tn, tp + tn + fp + fn);
  set(Metric::sensitivity, tp, tp + fn);
  set(Metric::specificity, tn, tn + fp);
  set(Metric::precision, tp, tp + fp);
  set(Metric::npv, tn, tn + fn);
  set(Metric::f1, 2.0 * tp, 2.0 * tp + fp + fn);
  const double sens = m[Metric::sensitivity];
  const double spec = m[Metric::specificity];
  m.values[static_cast<std::size_t>(Metric::balanced_accuracy)] = (sens + spec) / 2.0;
  if (m.flag(Metric::sensitivity) != MetricFlag::none || m.flag(Metric::specificity) != MetricFlag::none)
    m.flags[static_cast<std::size_t>(Metric::balanced_accuracy)] = MetricFlag::undefined;
  set(Metric::lr_plus, sens, 1.0 - spec);
  set(Metric::lr_minus, 1.0 - sens, spec);

  const bool both_classes = k.tp + k.fn > 0 && k.tn + k.fp > 0;
  for (auto id : {Metric::roc_auc, Metric::prc_auc, Metric::aps}) {
    if (!both_classes) m.flags[static_cast<std::size_t>(id)] = MetricFlag::undefined;
  }
  if (both_classes) {
    m.values[static_cast<std::size_t>(Metric::roc_auc)] = roc_auc(probabilities, labels);
    m.values[static_cast<std::size_t>(Metric::prc_auc)] = prc_curve(probabilities, labels).auc;
    m.values[static_cast<std::size_t>(Metric::aps)] = average_precision(probabilities, labels);
  }
  return m;
}

}  // namespace tabml
