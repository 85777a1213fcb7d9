#pragma once

#include <filesystem>
#include <string>

#include "tabml/metrics.hpp"

namespace tabml::layout {

namespace fs = std::filesystem;

// Every path is relative to the experiment directory.

inline fs::path dataset(const std::string& ds) { return fs::path(ds); }
inline fs::path exploratory(const std::string& ds) { return dataset(ds) / "exploratory"; }
inline fs::path cv(const std::string& ds) { return dataset(ds) / "cv"; }
inline fs::path recipes(const std::string& ds) { return dataset(ds) / "recipes"; }
inline fs::path selection(const std::string& ds) { return dataset(ds) / "feature_selection"; }
inline fs::path models(const std::string& ds) { return dataset(ds) / "models"; }
inline fs::path evaluation(const std::string& ds) { return dataset(ds) / "evaluation"; }
inline fs::path figures(const std::string& ds) { return dataset(ds) / "figures"; }

inline std::string fold_tag(int fold) { return "fold_" + std::to_string(fold); }
inline std::string model_tag(const std::string& alg, int fold) { return alg + "_" + fold_tag(fold); }

inline fs::path cleaned(const std::string& ds) { return exploratory(ds) / "cleaned.csv"; }
inline fs::path feature_types(const std::string& ds) { return exploratory(ds) / "feature_types.csv"; }
inline fs::path eda_summary(const std::string& ds) { return exploratory(ds) / "summary.csv"; }
inline fs::path univariate(const std::string& ds) { return exploratory(ds) / "univariate.csv"; }
inline fs::path correlations(const std::string& ds) { return exploratory(ds) / "correlations.csv"; }
inline fs::path class_counts_svg(const std::string& ds) { return exploratory(ds) / "class_counts.svg"; }

inline fs::path split(const std::string& ds) { return cv(ds) / "split.json"; }
inline fs::path fold_train(const std::string& ds, int f) { return cv(ds) / (fold_tag(f) + "_train.csv"); }
inline fs::path fold_test(const std::string& ds, int f) { return cv(ds) / (fold_tag(f) + "_test.csv"); }

inline fs::path recipe(const std::string& ds, int f) { return recipes(ds) / (fold_tag(f) + ".json"); }

inline fs::path scores(const std::string& ds, int f) { return selection(ds) / (fold_tag(f) + "_scores.csv"); }
inline fs::path selected(const std::string& ds, int f) { return selection(ds) / (fold_tag(f) + "_selected.csv"); }

inline fs::path model(const std::string& ds, const std::string& a, int f) { return models(ds) / (model_tag(a, f) + ".json"); }
inline fs::path trials(const std::string& ds, const std::string& a, int f) {
  return models(ds) / (model_tag(a, f) + "_trials.csv");
}
inline fs::path structure(const std::string& ds, const std::string& a, int f) {
  return models(ds) / (model_tag(a, f) + "_structure.txt");
}

inline fs::path fold_eval(const fs::path& eval_dir, const std::string& a, int f) {
  return eval_dir / "folds" / (model_tag(a, f) + ".json");
}
inline fs::path predictions(const fs::path& eval_dir, const std::string& a, int f) {
  return eval_dir / "predictions" / (model_tag(a, f) + ".csv");
}
inline fs::path curve(const fs::path& eval_dir, const std::string& a, int f, CurveKind kind) {
  return eval_dir / "curves" / (model_tag(a, f) + (kind == CurveKind::roc ? "_roc.csv" : "_prc.csv"));
}
inline fs::path importance(const fs::path& eval_dir, const std::string& a, int f) {
  return eval_dir / "importance" / (model_tag(a, f) + ".csv");
}
inline fs::path metrics(const fs::path& eval_dir) { return eval_dir / "metrics.csv"; }
inline fs::path aggregate(const fs::path& eval_dir) { return eval_dir / "aggregate.csv"; }
inline fs::path kruskal(const fs::path& eval_dir) { return eval_dir / "kruskal.csv"; }
inline fs::path pairwise(const fs::path& eval_dir) { return eval_dir / "pairwise.csv"; }
inline fs::path feature_importance(const fs::path& eval_dir) { return eval_dir / "feature_importance.csv"; }
inline fs::path composite(const fs::path& eval_dir) { return eval_dir / "composite_importance.csv"; }

inline fs::path comparison() { return fs::path("comparison"); }
inline fs::path summary_md() { return fs::path("summary.md"); }
inline fs::path summary_html() { return fs::path("summary.html"); }
inline fs::path manifest() { return fs::path("manifest.json"); }
inline fs::path runtimes() { return fs::path("runtimes.csv"); }
inline fs::path config_snapshot() { return fs::path("config.txt"); }
inline fs::path state() { return fs::path(".state"); }

}  // namespace tabml::layout
