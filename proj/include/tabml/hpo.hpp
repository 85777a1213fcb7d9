#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tabml/models.hpp"
#include "tabml/partition.hpp"

namespace tabml {

enum class Sampler { tpe, random };

const char* to_string(Sampler sampler);
Sampler sampler_from_string(std::string_view text);

struct Trial {
  int index = 0;
  Hyperparameters configuration;
  /// Mean of nested_fold_scores.
  double objective = 0.0;
  std::vector<double> nested_fold_scores;
  /// A nested fold could not be fitted or scored; objective forced to 0.
  bool degenerate = false;
};

struct SweepResult {
  std::string algorithm_id;
  /// Set when the algorithm is not tuned; best_configuration is then the
  /// default configuration and trials is empty.
  bool bypassed = false;
  Hyperparameters best_configuration;
  std::vector<Trial> trials;
  int n_trials_requested = 0;
  int n_trials_completed = 0;
  std::uint64_t seed = 0;
};

struct SweepOptions {
  int n_trials = 200;
  Sampler sampler = Sampler::tpe;
  std::uint64_t seed = 0;
  int nested_folds = 3;
};

/// Scores one configuration; returns per-fold scores or throws.
using TrialObjective = std::function<std::vector<double>(const Hyperparameters&)>;

/// Draws one configuration uniformly from the declared space (log-uniform on
/// log-scaled reals). Fixed settings outside the space keep their defaults.
Hyperparameters sample_random(const ClassifierSpec& spec, Rng& rng);

/// Sequential sweep over `spec.space` with an arbitrary objective.
SweepResult run_sweep(const ClassifierSpec& spec, const TrialObjective& objective, const SweepOptions& options);

/// Stratified nested folds over the training fold; fixed across trials.
CvSplit nested_split(const Dataset& train, int k, std::uint64_t seed);

/// Mean nested-CV balanced accuracy sweep for one (algorithm, training fold).
/// Untunable algorithms return a bypassed result with their defaults.
SweepResult optimize(const ClassifierSpec& spec, const Dataset& train, const SweepOptions& options);

/// Trial log: trial, one column per searched parameter, objective, fold scores, degenerate.
std::string trials_to_csv(const ClassifierSpec& spec, const SweepResult& result);

}  // namespace tabml
