#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tabml/pipeline.hpp"
#include "tabml/report.hpp"

namespace tabml::report {

namespace fs = std::filesystem;

/// Metrics shown in tables and boxplots (the four counts are left out).
const std::vector<Metric>& rate_metrics();

struct EvaluationFigures {
  std::vector<std::string> algorithms;
  int folds = 0;
  std::size_t top_features = 40;
  /// Feature importance boxplots and the composite bar plot.
  bool importance = true;
};

/// Relative paths of every figure render_evaluation_figures writes.
std::vector<fs::path> evaluation_figure_paths(const fs::path& fig_dir, const EvaluationFigures& options);
void render_evaluation_figures(const fs::path& root, const fs::path& eval_dir, const fs::path& fig_dir,
                               const std::string& title, const EvaluationFigures& options);

std::vector<fs::path> selection_figure_paths(const std::string& ds);
void render_selection_figures(const fs::path& root, const std::string& ds, int folds, std::size_t top_features);

/// Cross-dataset significance tables and boxplots under comparison/.
std::vector<fs::path> comparison_outputs(const PipelineConfig& config);
void render_comparison(const fs::path& root, const PipelineConfig& config, const std::vector<std::string>& datasets);

Document experiment_report(const fs::path& root, const PipelineConfig& config, const std::vector<std::string>& datasets);

struct ApplyReportInputs {
  std::string experiment_name;
  std::string training_dataset;
  std::string replication;
  std::vector<std::string> algorithms;
  int folds = 0;
  double alpha = 0.05;
};
/// `root` is the apply output directory.
Document apply_report(const fs::path& root, const ApplyReportInputs& inputs);

}  // namespace tabml::report
