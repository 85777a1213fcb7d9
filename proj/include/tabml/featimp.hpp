#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tabml/dataset.hpp"

namespace tabml {

/// Plug-in mutual information (nats) between each feature and the outcome.
/// Quantitative features are discretized into `bins` equal-frequency bins
/// by rank; tied values always share a bin.
std::vector<double> mutual_info(const Dataset& train, int bins = 10);

struct MultiSurfOptions {
  std::size_t instance_cap = 2000;
  std::uint64_t seed = 0;
};

/// MultiSURF scores. Above the instance cap a seeded subsample is scored
/// and distances are taken within the subsample only. `instances_used`
/// receives the number of target instances.
std::vector<double> multisurf(const Dataset& train, const MultiSurfOptions& options = {},
                              std::size_t* instances_used = nullptr);

using ReliefFn = std::function<std::vector<double>(const Dataset&)>;

struct TurfResult {
  /// Score from the last round each feature took part in.
  std::vector<double> scores;
  /// Feature indices best first: final survivors by score, then removed
  /// features, later removals first.
  std::vector<std::size_t> ranking;
  /// Number of scoring rounds each feature survived.
  std::vector<int> rounds_survived;
};

/// Repeatedly scores the surviving features and drops the lowest
/// max(1, floor(pct * survivors)) between rounds.
TurfResult turf(const Dataset& train, const ReliefFn& relief, double pct_removed, int iterations);

/// ceil(log2(features / target)) clamped to [1, 10].
int turf_default_iterations(std::size_t features, std::size_t target);

/// Uncapped: features with mi > 0 or ms > 0, in input order. Capped: the
/// same pool, alternately taking the best remaining MI and MultiSURF
/// feature (descending score, then name) until the cap is reached.
std::vector<std::string> collective_select(const std::vector<std::string>& names, const std::vector<double>& mi,
                                           const std::vector<double>& ms,
                                           std::optional<std::size_t> max_features = std::nullopt);

struct FeatureScores {
  int fold = 0;
  std::vector<std::string> features;
  std::vector<double> mi_scores;
  std::vector<double> multisurf_scores;
  std::size_t instances_used = 0;
  std::vector<std::string> selected_features;
};

/// feature,mi,multisurf,selected
std::string to_csv(const FeatureScores& scores);
FeatureScores feature_scores_from_csv(std::string_view text, int fold);

}  // namespace tabml
