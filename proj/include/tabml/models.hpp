#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tabml/dataset.hpp"

namespace tabml {

using ParamValue = std::variant<long long, double, std::string>;
using Hyperparameters = std::map<std::string, ParamValue>;

std::string to_string(const ParamValue& value);
nlohmann::json to_json(const Hyperparameters& hp);
Hyperparameters hyperparameters_from_json(const nlohmann::json& j);

long long get_int(const Hyperparameters& hp, const std::string& name);
double get_real(const Hyperparameters& hp, const std::string& name);
const std::string& get_choice(const Hyperparameters& hp, const std::string& name);

struct ParamDomain {
  enum class Type { integer, real, categorical };
  std::string name;
  Type type = Type::real;
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;
  std::vector<std::string> choices;

  bool contains(const ParamValue& value) const;
};

struct ClassifierSpec {
  std::string algorithm_id;
  std::string display_name;
  /// Searched by hpo when `tunable`.
  std::vector<ParamDomain> space;
  bool tunable = false;
  /// Complete default configuration, including fixed settings that are not
  /// part of the search space.
  Hyperparameters defaults;
  bool has_builtin_importance = false;
};

struct FitOptions {
  /// SVM only: Platt-calibrated probabilities. Hyperparameter sweeps turn
  /// this off and use sigmoid(decision value).
  bool calibrate = true;
};

/// A fitted learner. Implementations are single-threaded and immutable
/// after fit.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Matrix& X, std::span<const int> y, const std::vector<FeatureKind>& kinds,
                   const Hyperparameters& hp, std::uint64_t seed, const FitOptions& options) = 0;
  /// Class-1 probability per row.
  virtual std::vector<double> predict_proba(const Matrix& X) const = 0;
  virtual std::optional<std::vector<double>> builtin_importance() const { return std::nullopt; }
  virtual nlohmann::json parameters() const = 0;
  virtual void load_parameters(const nlohmann::json& j) = 0;
  /// Human-readable model structure (tree rules, GP expression); may be empty.
  virtual std::string describe(const std::vector<std::string>& feature_names) const {
    (void)feature_names;
    return {};
  }
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

/// Adds an algorithm to the registry; replaces any entry with the same id.
void register_classifier(ClassifierSpec spec, ClassifierFactory factory);
/// Built-in roster in canonical order: NB LR DT RF GB KNN SVM GP LCS.
std::vector<std::string> builtin_algorithms();
std::vector<std::string> registered_algorithms();
bool is_registered(const std::string& algorithm_id);
const ClassifierSpec& classifier_spec(const std::string& algorithm_id);
std::unique_ptr<Classifier> make_classifier(const std::string& algorithm_id);

/// Fills unspecified parameters from the defaults and checks every value
/// against its domain.
Hyperparameters complete_hyperparameters(const ClassifierSpec& spec, const Hyperparameters& overrides);

struct TrainedModel {
  static constexpr int kSchemaVersion = 1;

  std::string algorithm_id;
  Hyperparameters hyperparameters;
  std::vector<std::string> feature_subset;
  int fold = 0;
  std::uint64_t train_seed = 0;
  std::shared_ptr<const Classifier> classifier;

  /// Uses exactly feature_subset, in stored order; throws listing any
  /// feature the data lacks.
  std::vector<double> predict_proba(const Dataset& data) const;
  /// Per feature of feature_subset, when the algorithm has one.
  std::optional<std::vector<double>> builtin_importance() const { return classifier->builtin_importance(); }
};

/// Trains on every feature of `train` (already restricted to the selected
/// subset). Throws on a single-class training set or an out-of-domain
/// hyperparameter.
TrainedModel fit_model(const std::string& algorithm_id, const Hyperparameters& hp, const Dataset& train,
                       std::uint64_t seed, int fold = 0, const FitOptions& options = {});

/// Versioned JSON envelope; the fitted parameters travel as a base64 blob.
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view text);

}  // namespace tabml
