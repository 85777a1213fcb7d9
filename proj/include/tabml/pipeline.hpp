#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tabml/dataset.hpp"
#include "tabml/featimp.hpp"
#include "tabml/hpo.hpp"
#include "tabml/metrics.hpp"
#include "tabml/models.hpp"
#include "tabml/partition.hpp"
#include "tabml/transform.hpp"

namespace tabml {

/// Where per-model feature importance comes from. `builtin` falls back to
/// permutation importance for algorithms without a built-in estimate.
enum class ImportanceSource { permutation, builtin };

/// Flat `key = value` settings. `entries` holds the raw text values after
/// overrides; the typed fields are derived from it by resolve().
struct PipelineConfig {
  /// Verbatim text of the config file (empty when built from flags only).
  std::string source_text;
  std::map<std::string, std::string> entries;
  /// Flag overrides in the order they were applied.
  std::vector<std::pair<std::string, std::string>> overrides;

  std::filesystem::path data_dir;
  std::string experiment_name = "experiment";
  std::filesystem::path output_dir;
  DatasetConfig dataset;
  std::vector<std::string> categorical_features;
  std::vector<std::string> quantitative_features;
  std::vector<std::string> excluded_features;
  int type_cutoff = 10;

  int cv_folds = 10;
  CvStrategy cv_strategy = CvStrategy::stratified;
  ImputeMode impute = ImputeMode::iterative;

  std::optional<std::size_t> fs_max_features;
  std::size_t fs_instance_cap = 2000;
  bool turf = false;
  double turf_pct = 0.5;
  std::size_t turf_target = 100;
  int mi_bins = 10;

  std::vector<std::string> algorithms;
  /// hp.<ALG>.<name> entries: fixed values removed from the search space.
  std::map<std::string, Hyperparameters> fixed_hyperparameters;
  int n_trials = 200;
  Sampler sampler = Sampler::tpe;
  int nested_folds = 3;

  Metric primary_metric = Metric::balanced_accuracy;
  Metric cfibp_weight = Metric::roc_auc;
  double alpha = 0.05;
  ImportanceSource importance = ImportanceSource::permutation;
  int permutation_repeats = 10;
  std::size_t top_features = 40;

  std::optional<std::uint64_t> seed;
  int max_jobs = 1;

  std::filesystem::path experiment_dir() const { return output_dir / experiment_name; }
};

/// Every recognized key with its default, in documentation order.
const std::vector<std::pair<std::string, std::string>>& config_keys();

/// Parses `key = value` lines ('#' starts a comment). Unknown keys,
/// malformed lines and bad values raise ErrorKind::config.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);
/// Applies a flag override; flags win over file entries.
void set_option(PipelineConfig& config, const std::string& key, const std::string& value);
/// Re-derives the typed fields from `entries`.
void resolve(PipelineConfig& config);
/// Effective settings (defaults included), sorted by key.
std::vector<std::pair<std::string, std::string>> effective_settings(const PipelineConfig& config);

enum class Phase : int {
  eda = 1,
  partition,
  transform,
  importance,
  selection,
  training,
  evaluation,
  aggregation,
  figures,
  comparison,
  report,
};
inline constexpr int kPhaseCount = 11;
const char* phase_name(int phase);

struct Job {
  int phase = 0;
  std::string dataset;
  /// 1-based; 0 for dataset- or experiment-level jobs.
  int fold = 0;
  std::string algorithm;
  std::string id;
  /// Relative to the experiment directory.
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
};

struct PhasePlan {
  PipelineConfig config;
  std::filesystem::path experiment_dir;
  /// Sorted by file name; dataset name = file stem.
  std::vector<std::string> datasets;
  std::vector<std::filesystem::path> dataset_files;
  /// phases[p - 1] holds the jobs of phase p; phase 10 is empty for a
  /// single dataset.
  std::vector<std::vector<Job>> phases;

  bool has_phase(int phase) const { return !phases[static_cast<std::size_t>(phase - 1)].empty(); }
};

/// Validates the config (seed mandatory, known algorithms, data present)
/// and lays out every job with its input and output artifacts.
PhasePlan plan(const PipelineConfig& config);

struct JobFailure {
  std::string job_id;
  std::string message;
};

struct RunOptions {
  /// 0 uses the config's max_jobs.
  int max_jobs = 0;
  /// 0 runs every phase; otherwise only that phase, whose inputs must exist.
  int only_phase = 0;
};

struct RunResult {
  std::filesystem::path experiment_dir;
  std::size_t executed = 0;
  std::size_t skipped = 0;
  std::vector<std::string> executed_jobs;
  std::vector<JobFailure> failures;
  bool ok() const { return failures.empty(); }
};

/// Executes the plan phase by phase. Jobs whose outputs are present with
/// recorded checksums, whose inputs are unchanged and whose producers did
/// not rerun are skipped. A failing job halts its phase once in-flight jobs
/// finish; the manifest records the failure either way.
RunResult run(const PhasePlan& plan, const RunOptions& options = {});

}  // namespace tabml
