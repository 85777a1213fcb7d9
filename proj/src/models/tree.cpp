#include "models/tree.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace tabml::tree {

Binned bin_features(const Matrix& X, const std::vector<FeatureKind>& kinds) {
  Binned b;
  b.rows = X.rows();
  const std::size_t f = X.cols();
  b.codes.resize(f);
  b.cuts.resize(f);
  b.categorical.resize(f);
  for (std::size_t j = 0; j < f; ++j) {
    auto column = X.column(j);
    std::vector<double> u(column);
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    auto& cuts = b.cuts[j];
    auto& codes = b.codes[j];
    codes.resize(b.rows);
    const bool categorical = kinds[j] == FeatureKind::categorical && u.size() <= static_cast<std::size_t>(kMaxBins);
    b.categorical[j] = categorical;
    if (categorical) {
      cuts = u;
      for (std::size_t i = 0; i < b.rows; ++i)
        codes[i] = static_cast<std::uint16_t>(std::lower_bound(u.begin(), u.end(), column[i]) - u.begin());
      continue;
    }
    if (u.size() <= static_cast<std::size_t>(kMaxBins)) {
      for (std::size_t k = 0; k + 1 < u.size(); ++k) cuts.push_back(u[k] + (u[k + 1] - u[k]) / 2.0);
    } else {
      for (std::size_t k = 1; k < static_cast<std::size_t>(kMaxBins); ++k) {
        const std::size_t idx = k * u.size() / static_cast<std::size_t>(kMaxBins);
        cuts.push_back(u[idx - 1] + (u[idx] - u[idx - 1]) / 2.0);
      }
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    }
    for (std::size_t i = 0; i < b.rows; ++i)
      codes[i] = static_cast<std::uint16_t>(std::lower_bound(cuts.begin(), cuts.end(), column[i]) - cuts.begin());
  }
  return b;
}

int Tree::leaf_index(std::span<const double> row) const {
  int k = 0;
  while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(k)];
    const double x = row[static_cast<std::size_t>(n.feature)];
    const bool go_left = n.equals ? x == n.threshold : x <= n.threshold;
    k = go_left ? n.left : n.right;
  }
  return k;
}

std::size_t Tree::depth() const {
  std::function<std::size_t(int)> rec = [&](int k) -> std::size_t {
    const auto& n = nodes[static_cast<std::size_t>(k)];
    if (n.feature < 0) return 0;
    return 1 + std::max(rec(n.left), rec(n.right));
  };
  return nodes.empty() ? 0 : rec(0);
}

nlohmann::json to_json(const Tree& tree) {
  // Column arrays keep the archive compact.
  nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                 equals = nlohmann::json::array(), left = nlohmann::json::array(), right = nlohmann::json::array(),
                 value = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    equals.push_back(n.equals ? 1 : 0);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"equals", equals},
          {"left", left},       {"right", right},         {"value", value}};
}

Tree tree_from_json(const nlohmann::json& j) {
  Tree t;
  const auto& feature = j.at("feature");
  t.nodes.resize(feature.size());
  for (std::size_t k = 0; k < t.nodes.size(); ++k) {
    auto& n = t.nodes[k];
    n.feature = feature[k].get<int>();
    n.threshold = j.at("threshold")[k].get<double>();
    n.equals = j.at("equals")[k].get<int>() != 0;
    n.left = j.at("left")[k].get<int>();
    n.right = j.at("right")[k].get<int>();
    n.value = j.at("value")[k].get<double>();
  }
  return t;
}

namespace {

/// Per-row channel sums: two class weights for classification, one
/// weighted target for regression. A node's score is sum(channel^2) / W;
/// a split's gain is score(L) + score(R) - score(parent).
struct Builder {
  const Binned& data;
  std::size_t channels;
  std::vector<double> value;   // rows * channels
  std::vector<double> weight;  // rows
  GrowParams params;
  Rng* rng;
  std::vector<double>& importance;
  Tree tree;
  std::vector<int>* leaf_of_row = nullptr;
  bool classification = true;

  std::vector<double> hist;
  std::vector<double> hist_w;
  std::vector<std::size_t> feature_pool;

  double score(const double* sums, double w) const {
    if (w <= 0) return 0.0;
    double s = 0.0;
    for (std::size_t c = 0; c < channels; ++c) s += sums[c] * sums[c];
    return s / w;
  }

  void make_leaf(int node, const std::vector<double>& sums, double w, const std::vector<std::uint32_t>& rows) {
    auto& n = tree.nodes[static_cast<std::size_t>(node)];
    n.feature = -1;
    if (classification) n.value = w > 0 ? sums[1] / w : 0.0;
    else n.value = w > 0 ? sums[0] / w : 0.0;
    if (leaf_of_row)
      for (auto r : rows) (*leaf_of_row)[r] = node;
  }

  void grow(int node, std::vector<std::uint32_t> rows, int depth) {
    std::vector<double> sums(channels, 0.0);
    double w = 0.0;
    for (auto r : rows) {
      for (std::size_t c = 0; c < channels; ++c) sums[c] += value[r * channels + c];
      w += weight[r];
    }
    bool pure = false;
    if (classification) pure = sums[0] <= 0.0 || sums[1] <= 0.0;
    if (pure || depth >= params.max_depth || w < 2.0 * params.min_samples_leaf) {
      make_leaf(node, sums, w, rows);
      return;
    }

    // Candidate features, tried in ascending index order so equal gains
    // resolve to the lowest feature.
    std::vector<std::size_t> candidates;
    const std::size_t f = data.features();
    if (params.max_features == 0 || params.max_features >= f) {
      candidates.resize(f);
      std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    } else {
      feature_pool.resize(f);
      std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
      for (std::size_t k = 0; k < params.max_features; ++k) {
        const std::size_t pick = k + rng->below(f - k);
        std::swap(feature_pool[k], feature_pool[pick]);
      }
      candidates.assign(feature_pool.begin(), feature_pool.begin() + static_cast<std::ptrdiff_t>(params.max_features));
      std::sort(candidates.begin(), candidates.end());
    }

    const double parent = score(sums.data(), w);
    double best_gain = 1e-12 * std::max(1.0, std::abs(parent));
    int best_feature = -1;
    std::size_t best_bin = 0;
    std::vector<double> left(channels), right(channels);
    for (auto j : candidates) {
      const std::size_t bins = data.bins(j);
      if (bins < 2) continue;
      hist.assign(bins * channels, 0.0);
      hist_w.assign(bins, 0.0);
      const auto& codes = data.codes[j];
      for (auto r : rows) {
        const std::size_t b = codes[r];
        for (std::size_t c = 0; c < channels; ++c) hist[b * channels + c] += value[r * channels + c];
        hist_w[b] += weight[r];
      }
      if (data.categorical[j]) {
        for (std::size_t b = 0; b < bins; ++b) {
          const double wl = hist_w[b];
          const double wr = w - wl;
          if (wl < params.min_samples_leaf || wr < params.min_samples_leaf) continue;
          for (std::size_t c = 0; c < channels; ++c) {
            left[c] = hist[b * channels + c];
            right[c] = sums[c] - left[c];
          }
          const double gain = score(left.data(), wl) + score(right.data(), wr) - parent;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(j);
            best_bin = b;
          }
        }
      } else {
        std::fill(left.begin(), left.end(), 0.0);
        double wl = 0.0;
        for (std::size_t b = 0; b + 1 < bins; ++b) {
          for (std::size_t c = 0; c < channels; ++c) left[c] += hist[b * channels + c];
          wl += hist_w[b];
          const double wr = w - wl;
          if (wl < params.min_samples_leaf) continue;
          if (wr < params.min_samples_leaf) break;
          for (std::size_t c = 0; c < channels; ++c) right[c] = sums[c] - left[c];
          const double gain = score(left.data(), wl) + score(right.data(), wr) - parent;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(j);
            best_bin = b;
          }
        }
      }
    }
    if (best_feature < 0) {
      make_leaf(node, sums, w, rows);
      return;
    }

    const auto j = static_cast<std::size_t>(best_feature);
    const bool categorical = data.categorical[j];
    std::vector<std::uint32_t> left_rows, right_rows;
    for (auto r : rows) {
      const std::size_t b = data.codes[j][r];
      const bool go_left = categorical ? b == best_bin : b <= best_bin;
      (go_left ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    importance[j] += best_gain;

    const int l = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int rr = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    auto& n = tree.nodes[static_cast<std::size_t>(node)];
    n.feature = best_feature;
    n.equals = categorical;
    n.threshold = data.cuts[j][best_bin];
    n.left = l;
    n.right = rr;
    grow(l, std::move(left_rows), depth + 1);
    grow(rr, std::move(right_rows), depth + 1);
  }
};

}  // namespace

Tree grow_classifier(const Binned& data, std::span<const int> y, std::span<const double> weights,
                     const GrowParams& params, Rng* rng, std::vector<double>& importance) {
  Builder b{data, 2, {}, {}, params, rng, importance, {}, nullptr, true, {}, {}, {}};
  b.classification = true;
  b.value.assign(data.rows * 2, 0.0);
  b.weight.assign(weights.begin(), weights.end());
  std::vector<std::uint32_t> rows;
  for (std::size_t i = 0; i < data.rows; ++i) {
    if (weights[i] <= 0) continue;
    b.value[i * 2 + static_cast<std::size_t>(y[i])] = weights[i];
    rows.push_back(static_cast<std::uint32_t>(i));
  }
  b.tree.nodes.emplace_back();
  b.grow(0, std::move(rows), 0);
  return std::move(b.tree);
}

Tree grow_regressor(const Binned& data, std::span<const double> targets, const std::vector<std::uint32_t>& rows,
                    const GrowParams& params, Rng* rng, std::vector<double>& importance, std::vector<int>& leaf_of_row) {
  Builder b{data, 1, {}, {}, params, rng, importance, {}, nullptr, false, {}, {}, {}};
  b.classification = false;
  b.value.assign(targets.begin(), targets.end());
  b.weight.assign(data.rows, 1.0);
  leaf_of_row.assign(data.rows, -1);
  b.leaf_of_row = &leaf_of_row;
  b.tree.nodes.emplace_back();
  b.grow(0, rows, 0);
  return std::move(b.tree);
}

std::string describe(const Tree& tree, const std::vector<std::string>& names) {
  std::string out;
  std::function<void(int, int)> rec = [&](int k, int indent) {
    const auto& n = tree.nodes[static_cast<std::size_t>(k)];
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    if (n.feature < 0) {
      out += pad + "value " + format_double(n.value) + "\n";
      return;
    }
    const auto& name = names[static_cast<std::size_t>(n.feature)];
    out += pad + "if " + name + (n.equals ? " == " : " <= ") + format_double(n.threshold) + ":\n";
    rec(n.left, indent + 1);
    out += pad + "else:\n";
    rec(n.right, indent + 1);
  };
  if (!tree.nodes.empty()) rec(0, 0);
  return out;
}

}  // namespace tabml::tree
