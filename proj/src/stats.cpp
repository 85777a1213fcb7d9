#include "tabml/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "tabml/common.hpp"

namespace tabml::stats {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double tie_term(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    total += t * t * t - t;
    i = j;
  }
  return total;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double chi2_sf(double x, double df) {
  require(df > 0, "chi2_sf: df must be positive");
  if (!(x > 0)) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), "mann_whitney_u: both samples must be non-empty");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  const auto ranks = average_ranks(all);
  double ra = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ra += ranks[i];

  TestResult result;
  result.statistic = ra - na * (na + 1.0) / 2.0;
  const double n = na + nb;
  const double mu = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - tie_term(all) / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    result.degenerate = true;
    result.p_value = 1.0;
    return result;
  }
  const double z = (std::abs(result.statistic - mu) - 0.5) / std::sqrt(var);
  result.p_value = std::min(1.0, 2.0 * normal_sf(z));
  return result;
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "wilcoxon_signed_rank: samples must be paired (equal length)");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  TestResult result;
  if (diffs.empty()) {
    result.degenerate = true;
    result.p_value = 1.0;
    return result;
  }
  std::vector<double> magnitudes(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) magnitudes[i] = std::abs(diffs[i]);
  const auto ranks = average_ranks(magnitudes);
  double plus = 0.0;
  double minus = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) (diffs[i] > 0 ? plus : minus) += ranks[i];
  result.statistic = std::min(plus, minus);

  const double n = static_cast<double>(diffs.size());
  const double mu = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term(magnitudes) / 48.0;
  if (!(var > 0.0)) {
    result.p_value = 1.0;
    return result;
  }
  const double z = (std::abs(result.statistic - mu) - 0.5) / std::sqrt(var);
  result.p_value = std::min(1.0, 2.0 * normal_sf(z));
  return result;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  require(groups.size() >= 2, "kruskal_wallis: at least two groups required");
  std::vector<double> all;
  for (const auto& g : groups) {
    require(!g.empty(), "kruskal_wallis: groups must be non-empty");
    all.insert(all.end(), g.begin(), g.end());
  }
  const double n = static_cast<double>(all.size());
  TestResult result;
  const double ties = tie_term(all);
  const double correction = 1.0 - ties / (n * n * n - n);
  if (!(correction > 0.0)) {
    result.degenerate = true;
    return result;
  }
  const auto ranks = average_ranks(all);
  double sum = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double r = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) r += ranks[offset + i];
    offset += g.size();
    sum += r * r / static_cast<double>(g.size());
  }
  const double h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
  result.statistic = std::max(0.0, h);
  result.p_value = chi2_sf(result.statistic, static_cast<double>(groups.size() - 1));
  return result;
}

namespace {

struct Contingency {
  std::vector<std::vector<double>> counts;
  double total = 0.0;
};

Contingency contingency(std::span<const double> x, std::span<const double> y) {
  std::map<double, std::size_t> xs, ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) continue;
    xs.emplace(x[i], 0);
    ys.emplace(y[i], 0);
  }
  std::size_t k = 0;
  for (auto& [v, idx] : xs) idx = k++;
  k = 0;
  for (auto& [v, idx] : ys) idx = k++;
  Contingency c;
  c.counts.assign(xs.size(), std::vector<double>(ys.size(), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) continue;
    c.counts[xs[x[i]]][ys[y[i]]] += 1.0;
    c.total += 1.0;
  }
  return c;
}

double chi_square_statistic(const Contingency& c) {
  if (c.counts.empty()) return 0.0;
  const std::size_t r = c.counts.size();
  const std::size_t k = c.counts.front().size();
  std::vector<double> rows(r, 0.0), cols(k, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      rows[i] += c.counts[i][j];
      cols[j] += c.counts[i][j];
    }
  double stat = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double e = rows[i] * cols[j] / c.total;
      if (e > 0) stat += (c.counts[i][j] - e) * (c.counts[i][j] - e) / e;
    }
  return stat;
}

}  // namespace

TestResult chi_square_independence(std::span<const double> feature, std::span<const int> outcome) {
  require(feature.size() == outcome.size(), "chi_square_independence: length mismatch");
  std::vector<double> y(outcome.begin(), outcome.end());
  const auto c = contingency(feature, y);
  TestResult result;
  if (c.counts.size() < 2 || c.counts.front().size() < 2) {
    result.degenerate = true;
    return result;
  }
  result.statistic = chi_square_statistic(c);
  const double df = static_cast<double>((c.counts.size() - 1) * (c.counts.front().size() - 1));
  result.p_value = chi2_sf(result.statistic, df);
  return result;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "pearson: length mismatch");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0) || !(syy > 0)) return kNaN;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double cramers_v(std::span<const double> x, std::span<const double> y) {
  const auto c = contingency(x, y);
  if (c.counts.empty()) return kNaN;
  const std::size_t m = std::min(c.counts.size(), c.counts.front().size());
  if (m < 2 || c.total <= 0) return kNaN;
  const double v = std::sqrt(chi_square_statistic(c) / (c.total * static_cast<double>(m - 1)));
  return std::min(1.0, v);
}

double rank_biserial(std::span<const double> binary, std::span<const double> values) {
  std::vector<double> levels;
  for (double b : binary)
    if (!std::isnan(b) && std::find(levels.begin(), levels.end(), b) == levels.end()) levels.push_back(b);
  if (levels.size() != 2) return kNaN;
  std::sort(levels.begin(), levels.end());
  std::vector<double> lo, hi;
  for (std::size_t i = 0; i < binary.size(); ++i) (binary[i] == levels[1] ? hi : lo).push_back(values[i]);
  const auto mw = mann_whitney_u(hi, lo);
  return 2.0 * mw.statistic / (static_cast<double>(hi.size()) * static_cast<double>(lo.size())) - 1.0;
}

}  // namespace tabml::stats
