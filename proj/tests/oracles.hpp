#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance runner. Written from the textbook definitions, independent of
// the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

inline double naive_rank(const std::vector<double>& all, double v) {
  double less = 0, equal = 0;
  for (double x : all) {
    if (x < v) less += 1;
    else if (x == v) equal += 1;
  }
  return less + (equal + 1.0) / 2.0;
}

/// Count of (a, b) pairs with a > b plus half the ties.
inline double mwu_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

inline double wilcoxon_w(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d, mag;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) {
      d.push_back(a[i] - b[i]);
      mag.push_back(std::abs(a[i] - b[i]));
    }
  double plus = 0, minus = 0;
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? plus : minus) += naive_rank(mag, mag[i]);
  return std::min(plus, minus);
}

inline double kruskal_h(const std::vector<std::vector<double>>& groups) {
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  const double n = static_cast<double>(all.size());
  double sum = 0;
  for (const auto& g : groups) {
    double r = 0;
    for (double v : g) r += naive_rank(all, v);
    sum += r * r / static_cast<double>(g.size());
  }
  double ties = 0;
  std::vector<double> seen;
  for (double v : all) {
    if (std::find(seen.begin(), seen.end(), v) != seen.end()) continue;
    seen.push_back(v);
    const double t = static_cast<double>(std::count(all.begin(), all.end(), v));
    ties += t * t * t - t;
  }
  const double c = 1.0 - ties / (n * n * n - n);
  if (c <= 0) return 0.0;
  return (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / c;
}

/// Calls `visit(labels)` for every assignment of positions 0..n-1 to groups
/// of the given sizes (multiset permutations of group labels).
inline void for_each_assignment(const std::vector<std::size_t>& sizes,
                                const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> labels;
  for (std::size_t g = 0; g < sizes.size(); ++g) labels.insert(labels.end(), sizes[g], static_cast<int>(g));
  do {
    visit(labels);
  } while (std::next_permutation(labels.begin(), labels.end()));
}

inline std::vector<std::vector<double>> split_by(const std::vector<double>& pooled, const std::vector<int>& labels,
                                                 std::size_t groups) {
  std::vector<std::vector<double>> out(groups);
  for (std::size_t i = 0; i < pooled.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(pooled[i]);
  return out;
}

/// Exact two-sided Mann-Whitney p by enumerating every split of the pooled
/// sample.
inline double mwu_exact_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double mu = static_cast<double>(a.size() * b.size()) / 2.0;
  const double observed = std::abs(mwu_u(a, b) - mu);
  double extreme = 0, total = 0;
  for_each_assignment({a.size(), b.size()}, [&](const std::vector<int>& labels) {
    auto g = split_by(pooled, labels, 2);
    total += 1;
    if (std::abs(mwu_u(g[0], g[1]) - mu) >= observed - 1e-12) extreme += 1;
  });
  return extreme / total;
}

/// Exact p of the Kruskal-Wallis H by enumeration.
inline double kruskal_exact_p(const std::vector<std::vector<double>>& groups) {
  std::vector<double> pooled;
  std::vector<std::size_t> sizes;
  for (const auto& g : groups) {
    pooled.insert(pooled.end(), g.begin(), g.end());
    sizes.push_back(g.size());
  }
  const double observed = kruskal_h(groups);
  double extreme = 0, total = 0;
  for_each_assignment(sizes, [&](const std::vector<int>& labels) {
    total += 1;
    if (kruskal_h(split_by(pooled, labels, groups.size())) >= observed - 1e-12) extreme += 1;
  });
  return extreme / total;
}

/// Fraction of (positive, negative) pairs ordered correctly, ties half.
inline double pairwise_auc(const std::vector<double>& p, const std::vector<int>& y) {
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

}  // namespace oracle
