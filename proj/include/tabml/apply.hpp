#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tabml {

struct ApplyOptions {
  std::filesystem::path experiment_dir;
  std::filesystem::path data;
  /// Training dataset whose models are applied; required when the
  /// experiment holds more than one.
  std::string dataset;
  /// No outcome needed; writes probabilities only.
  bool predictions_only = false;
  int max_jobs = 1;
};

struct ApplyResult {
  /// experiment_dir/applymodel/<replication name>
  std::filesystem::path output_dir;
  std::string training_dataset;
  std::string replication;
  std::size_t models = 0;
  std::size_t instances = 0;
};

/// Evaluates every (algorithm, fold) model of a finished experiment on new
/// data with the model's own frozen recipe and feature subset.
ApplyResult apply_models(const ApplyOptions& options);

}  // namespace tabml
