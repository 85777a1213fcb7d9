#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tabml/evalstats.hpp"
#include "tabml/pipeline.hpp"

namespace tabml::stages {

namespace fs = std::filesystem;

/// Writes `content` to root / rel atomically, creating directories.
void write_artifact(const fs::path& root, const fs::path& rel, std::string_view content);
std::string read_artifact(const fs::path& root, const fs::path& rel);

/// Loads a CSV written by the pipeline and restores the recorded feature kinds.
Dataset load_typed(const fs::path& csv, const fs::path& feature_types_csv, const DatasetConfig& config);

void eda(const PipelineConfig& c, const fs::path& root, const std::string& ds, const fs::path& file);
void partition(const PipelineConfig& c, const fs::path& root, const std::string& ds);
void transform(const PipelineConfig& c, const fs::path& root, const std::string& ds, int fold);
void importance(const PipelineConfig& c, const fs::path& root, const std::string& ds, int fold);
void selection(const PipelineConfig& c, const fs::path& root, const std::string& ds, int fold);
void training(const PipelineConfig& c, const fs::path& root, const std::string& ds, const std::string& alg, int fold);
void evaluation(const PipelineConfig& c, const fs::path& root, const std::string& ds, const std::string& alg, int fold);
void aggregation(const PipelineConfig& c, const fs::path& root, const std::string& ds);

/// Spec with fixed hyperparameters moved out of the search space.
ClassifierSpec effective_spec(const PipelineConfig& c, const std::string& alg);

struct EvaluateOptions {
  bool importance = true;
  int permutation_repeats = 10;
  std::uint64_t seed = 0;
};

/// Replays the recipe on raw data, predicts, and writes the fold JSON,
/// predictions, ROC/PRC points and (optionally) importance under eval_dir.
void evaluate_model(const TrainedModel& model, const TransformRecipe& recipe, const Dataset& raw, const fs::path& root,
                    const fs::path& eval_dir, const EvaluateOptions& options);

/// Probabilities only, for data without an outcome.
void write_predictions(const TrainedModel& model, const TransformRecipe& recipe, const Dataset& raw,
                       const fs::path& root, const fs::path& eval_dir);

struct AggregateOptions {
  std::vector<std::string> algorithms;
  int folds = 0;
  double alpha = 0.05;
  Metric cfibp_weight = Metric::roc_auc;
  /// Empty disables the importance tables.
  std::vector<std::string> features;
  ImportanceSource importance = ImportanceSource::permutation;
};

/// metrics.csv, aggregate.csv, kruskal.csv, pairwise.csv and, with
/// features, feature_importance.csv plus composite_importance.csv.
void aggregate_evaluations(const fs::path& root, const fs::path& eval_dir, const AggregateOptions& options);

/// algorithm,fold,<16 metrics>,flags
std::string metrics_to_csv(const std::vector<FoldRecord>& records);
std::vector<FoldRecord> metrics_from_csv(std::string_view text);

}  // namespace tabml::stages
