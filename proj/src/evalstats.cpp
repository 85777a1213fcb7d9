#include "tabml/evalstats.hpp"

#include <algorithm>
#include <cmath>

namespace tabml {

const Aggregate& AggregateTable::at(const std::string& algorithm, Metric m) const {
  for (std::size_t k = 0; k < algorithms.size(); ++k)
    if (algorithms[k] == algorithm) return rows[k][static_cast<std::size_t>(m)];
  fail(ErrorKind::invalid_argument, "no aggregate for algorithm '" + algorithm + "'");
}

std::vector<double> fold_values(const std::vector<FoldRecord>& records, const std::string& algorithm, Metric m) {
  std::vector<const FoldRecord*> mine;
  for (const auto& r : records)
    if (r.algorithm == algorithm) mine.push_back(&r);
  std::stable_sort(mine.begin(), mine.end(), [](const FoldRecord* a, const FoldRecord* b) { return a->fold < b->fold; });
  std::vector<double> out;
  for (const auto* r : mine) out.push_back(r->metrics[m]);
  return out;
}

AggregateTable aggregate(const std::vector<FoldRecord>& records) {
  AggregateTable t;
  for (const auto& r : records)
    if (std::find(t.algorithms.begin(), t.algorithms.end(), r.algorithm) == t.algorithms.end())
      t.algorithms.push_back(r.algorithm);
  for (const auto& a : t.algorithms) {
    std::array<Aggregate, kMetricCount> row{};
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      const auto v = fold_values(records, a, static_cast<Metric>(m));
      row[m].mean = mean(v);
      row[m].median = median(v);
      row[m].sd = v.size() > 1 ? sample_sd(v) : 0.0;
    }
    t.rows.push_back(row);
  }
  return t;
}

std::string to_csv(const AggregateTable& table) {
  std::string out = "algorithm,metric,mean,median,sd\n";
  for (std::size_t k = 0; k < table.algorithms.size(); ++k)
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      const auto& a = table.rows[k][m];
      out += csv_field(table.algorithms[k]) + "," + std::string(metric_name(static_cast<Metric>(m))) + "," +
             format_double(a.mean) + "," + format_double(a.median) + "," + format_double(a.sd) + "\n";
    }
  return out;
}

double evaluate_metric(Metric m, std::span<const double> probabilities, std::span<const int> labels) {
  return metric_set(confusion(probabilities, labels), probabilities, labels)[m];
}

std::vector<double> permutation_importance(const TrainedModel& model, const Dataset& test,
                                           const std::vector<std::string>& all_features, Metric metric,
                                           int n_repeats, std::uint64_t seed) {
  require(n_repeats >= 1, "permutation importance: n_repeats must be at least 1");
  bool pos = false, neg = false;
  for (int y : test.outcome) (y == 1 ? pos : neg) = true;
  if (!pos || !neg) fail(ErrorKind::invalid_argument, "permutation importance: test fold holds a single class");

  const Dataset view = test.select_features(model.feature_subset);
  const double baseline = evaluate_metric(metric, model.classifier->predict_proba(view.values), view.outcome);
  std::vector<double> out(all_features.size(), 0.0);
  Matrix X = view.values;
  for (std::size_t j = 0; j < model.feature_subset.size(); ++j) {
    const auto& name = model.feature_subset[j];
    const auto original = X.column(j);
    double total = 0.0;
    for (int r = 0; r < n_repeats; ++r) {
      Rng rng(derive_seed(seed, {"permute", name, std::to_string(r)}));
      auto shuffled = original;
      rng.shuffle(shuffled);
      X.set_column(j, shuffled);
      total += evaluate_metric(metric, model.classifier->predict_proba(X), view.outcome);
    }
    X.set_column(j, original);
    const auto it = std::find(all_features.begin(), all_features.end(), name);
    require(it != all_features.end(), "permutation importance: feature '" + name + "' not in the feature list");
    out[static_cast<std::size_t>(it - all_features.begin())] = baseline - total / n_repeats;
  }
  return out;
}

std::vector<double> composite_importance(const std::vector<std::vector<double>>& per_algorithm,
                                         const std::vector<double>& weights) {
  require(!per_algorithm.empty(), "composite importance needs at least one algorithm");
  require(per_algorithm.size() == weights.size(), "composite importance: one weight per algorithm");
  const std::size_t f = per_algorithm.front().size();
  std::vector<double> out(f, 0.0);
  for (std::size_t a = 0; a < per_algorithm.size(); ++a) {
    const auto& v = per_algorithm[a];
    require(v.size() == f, "composite importance: vectors differ in length");
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double range = *hi - *lo;
    if (!(range > 0)) continue;
    for (std::size_t j = 0; j < f; ++j) out[j] += weights[a] * (v[j] - *lo) / range;
  }
  return out;
}

std::vector<std::array<std::vector<double>, kMetricCount>> group_values(const std::vector<FoldRecord>& records,
                                                                       const std::vector<std::string>& algorithms) {
  std::vector<std::array<std::vector<double>, kMetricCount>> out;
  for (const auto& a : algorithms) {
    std::array<std::vector<double>, kMetricCount> row;
    for (std::size_t m = 0; m < kMetricCount; ++m) row[m] = fold_values(records, a, static_cast<Metric>(m));
    out.push_back(std::move(row));
  }
  return out;
}

SignificanceFindings significance_workflow(const std::vector<std::string>& groups,
                                           const std::vector<std::array<std::vector<double>, kMetricCount>>& values,
                                           double alpha) {
  require(groups.size() == values.size(), "significance: one value set per group");
  SignificanceFindings out;
  if (groups.size() < 2) return out;
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    std::vector<std::vector<double>> samples;
    for (const auto& g : values) samples.push_back(g[m]);
    KruskalFinding kw;
    kw.metric = static_cast<Metric>(m);
    kw.result = stats::kruskal_wallis(samples);
    kw.significant = !kw.result.degenerate && kw.result.p_value < alpha;
    out.kruskal.push_back(kw);
    if (!kw.significant) continue;
    for (std::size_t a = 0; a < groups.size(); ++a)
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        PairwiseFinding p;
        p.metric = kw.metric;
        p.a = groups[a];
        p.b = groups[b];
        p.mann_whitney = stats::mann_whitney_u(samples[a], samples[b]);
        if (samples[a].size() == samples[b].size()) p.wilcoxon = stats::wilcoxon_signed_rank(samples[a], samples[b]);
        else p.wilcoxon = {0.0, 1.0, true};
        out.pairwise.push_back(p);
      }
  }
  return out;
}

std::string kruskal_to_csv(const SignificanceFindings& findings) {
  std::string out = "metric,statistic,p_value,significant,degenerate\n";
  for (const auto& k : findings.kruskal)
    out += std::string(metric_name(k.metric)) + "," + format_double(k.result.statistic) + "," +
           format_double(k.result.p_value) + "," + (k.significant ? "1" : "0") + "," +
           (k.result.degenerate ? "1" : "0") + "\n";
  return out;
}

std::string pairwise_to_csv(const SignificanceFindings& findings) {
  std::string out = "metric,a,b,mwu_u,mwu_p,wilcoxon_w,wilcoxon_p,wilcoxon_degenerate\n";
  for (const auto& p : findings.pairwise)
    out += std::string(metric_name(p.metric)) + "," + csv_field(p.a) + "," + csv_field(p.b) + "," +
           format_double(p.mann_whitney.statistic) + "," + format_double(p.mann_whitney.p_value) + "," +
           format_double(p.wilcoxon.statistic) + "," + format_double(p.wilcoxon.p_value) + "," +
           (p.wilcoxon.degenerate ? "1" : "0") + "\n";
  return out;
}

}  // namespace tabml
