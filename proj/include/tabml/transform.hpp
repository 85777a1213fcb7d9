#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tabml/dataset.hpp"

namespace tabml {

enum class ImputeMode { simple, iterative };

const char* to_string(ImputeMode mode);
ImputeMode impute_mode_from_string(std::string_view text);

struct ImputerEntry {
  /// "mode", "mean" or "iterative". For iterative entries `value` is the
  /// fallback mean used to initialize the round-robin passes.
  std::string method;
  double value = 0.0;
  /// Observed training levels (categorical features only).
  std::vector<double> levels;
};

/// One ridge model of a round-robin pass: target feature regressed on all
/// other features, coefficients indexed like feature_order (target slot 0).
struct RidgeStep {
  std::size_t target = 0;
  double intercept = 0.0;
  std::vector<double> coefficients;
};

struct ScalerEntry {
  bool scaled = false;
  double center = 0.0;
  double scale = 1.0;
};

struct TransformRecipe {
  static constexpr int kSchemaVersion = 1;

  std::string fitted_on;
  std::vector<std::string> feature_order;
  std::vector<FeatureKind> kinds;
  std::vector<ImputerEntry> imputers;
  /// Per-round ridge models in fit order; replayed verbatim on apply.
  std::vector<std::vector<RidgeStep>> rounds;
  std::vector<ScalerEntry> scalers;

  bool operator==(const TransformRecipe& other) const;
};

struct IterativeSettings {
  double ridge_lambda = 1.0;
  int max_rounds = 10;
  double tolerance = 1e-3;
};

TransformRecipe fit_imputer(const Dataset& train, ImputeMode mode, std::string fitted_on = {},
                            const IterativeSettings& settings = {});
/// Fills every missing cell of the recipe's features. Present cells are
/// never changed except unknown categorical levels, which are treated as
/// missing (with a warning). Output columns follow feature_order.
Dataset apply_imputer(const TransformRecipe& recipe, const Dataset& data);

/// Adds the scaling part to `recipe`, fitted on imputed training data.
void fit_scaler(TransformRecipe& recipe, const Dataset& imputed_train);
/// (x - center) / scale on quantitative features; sets the scaled flag.
Dataset apply_scaler(const TransformRecipe& recipe, const Dataset& data);

/// apply_imputer followed by apply_scaler.
Dataset apply_transform(const TransformRecipe& recipe, const Dataset& data);

nlohmann::json to_json(const TransformRecipe& recipe);
TransformRecipe recipe_from_json(const nlohmann::json& j);

}  // namespace tabml
