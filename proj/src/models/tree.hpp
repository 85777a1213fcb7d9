#pragma once

// Histogram-binned CART shared by the DT, RF and GB learners.

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "tabml/common.hpp"
#include "tabml/dataset.hpp"

namespace tabml::tree {

inline constexpr int kMaxBins = 256;

/// Feature-major bin codes. For a quantitative feature code(x) counts the
/// thresholds strictly below x, so "code <= b" is exactly "x <= threshold[b]".
/// A categorical feature (at most kMaxBins levels) codes each level.
struct Binned {
  std::size_t rows = 0;
  std::vector<std::vector<std::uint16_t>> codes;
  std::vector<std::vector<double>> cuts;  // thresholds, or level values
  std::vector<char> categorical;

  std::size_t features() const { return codes.size(); }
  std::size_t bins(std::size_t j) const { return categorical[j] ? cuts[j].size() : cuts[j].size() + 1; }
};

Binned bin_features(const Matrix& X, const std::vector<FeatureKind>& kinds);

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  bool equals = false;  // categorical: x == threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<Node> nodes;

  int leaf_index(std::span<const double> row) const;
  double predict(std::span<const double> row) const { return nodes[static_cast<std::size_t>(leaf_index(row))].value; }
  std::size_t depth() const;
};

nlohmann::json to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);

struct GrowParams {
  int max_depth = 30;
  double min_samples_leaf = 1.0;
  /// Features tried per split; 0 means all.
  std::size_t max_features = 0;
};

/// Gini classification tree. `weights` are per-row multiplicities (bootstrap
/// counts); rows of weight 0 are ignored. Leaves hold the class-1 fraction.
/// Adds each split's impurity decrease to `importance[feature]`.
Tree grow_classifier(const Binned& data, std::span<const int> y, std::span<const double> weights,
                     const GrowParams& params, Rng* rng, std::vector<double>& importance);

/// Squared-error regression tree on `targets` over `rows`. Leaves hold the
/// mean target; `leaf_of_row` (size data.rows) receives each row's leaf.
Tree grow_regressor(const Binned& data, std::span<const double> targets, const std::vector<std::uint32_t>& rows,
                    const GrowParams& params, Rng* rng, std::vector<double>& importance, std::vector<int>& leaf_of_row);

/// Indented if/else listing of the tree.
std::string describe(const Tree& tree, const std::vector<std::string>& names);

}  // namespace tabml::tree
