#include "tabml/transform.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "tabml/log.hpp"

namespace tabml {

const char* to_string(ImputeMode mode) { return mode == ImputeMode::simple ? "simple" : "iterative"; }

ImputeMode impute_mode_from_string(std::string_view text) {
  if (text == "simple" || text == "mean") return ImputeMode::simple;
  if (text == "iterative") return ImputeMode::iterative;
  fail(ErrorKind::config, "unknown imputation mode: " + std::string(text));
}

bool TransformRecipe::operator==(const TransformRecipe& o) const {
  if (fitted_on != o.fitted_on || feature_order != o.feature_order || kinds != o.kinds) return false;
  if (imputers.size() != o.imputers.size() || scalers.size() != o.scalers.size() || rounds.size() != o.rounds.size())
    return false;
  for (std::size_t j = 0; j < imputers.size(); ++j) {
    const auto& a = imputers[j];
    const auto& b = o.imputers[j];
    if (a.method != b.method || a.value != b.value || a.levels != b.levels) return false;
  }
  for (std::size_t j = 0; j < scalers.size(); ++j) {
    const auto& a = scalers[j];
    const auto& b = o.scalers[j];
    if (a.scaled != b.scaled || a.center != b.center || a.scale != b.scale) return false;
  }
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    if (rounds[r].size() != o.rounds[r].size()) return false;
    for (std::size_t s = 0; s < rounds[r].size(); ++s) {
      const auto& a = rounds[r][s];
      const auto& b = o.rounds[r][s];
      if (a.target != b.target || a.intercept != b.intercept || a.coefficients != b.coefficients) return false;
    }
  }
  return true;
}

namespace {

double mode_of(const std::vector<double>& values) {
  std::map<double, std::size_t> counts;
  for (double v : values) ++counts[v];
  double best = 0.0;
  std::size_t best_count = 0;
  for (const auto& [v, c] : counts) {
    if (c > best_count) {  // map order: ties keep the smallest value
      best = v;
      best_count = c;
    }
  }
  return best;
}

RidgeStep fit_ridge(const Dataset& filled, const std::vector<std::uint8_t>& originally_missing, std::size_t target,
                    double lambda) {
  const std::size_t n = filled.n_instances();
  const std::size_t f = filled.n_features();
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; ++i)
    if (!originally_missing[i * f + target]) rows.push_back(i);
  std::vector<std::size_t> predictors;
  for (std::size_t j = 0; j < f; ++j)
    if (j != target) predictors.push_back(j);

  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(predictors.size());
  Eigen::MatrixXd X(m, p);
  Eigen::VectorXd y(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto i = rows[static_cast<std::size_t>(r)];
    y(r) = filled.values(i, target);
    for (Eigen::Index c = 0; c < p; ++c) X(r, c) = filled.values(i, predictors[static_cast<std::size_t>(c)]);
  }
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  X.rowwise() -= x_mean;
  y.array() -= y_mean;
  Eigen::MatrixXd gram = X.transpose() * X;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd beta = gram.ldlt().solve(X.transpose() * y);

  RidgeStep step;
  step.target = target;
  step.coefficients.assign(f, 0.0);
  step.intercept = y_mean;
  for (Eigen::Index c = 0; c < p; ++c) {
    step.coefficients[predictors[static_cast<std::size_t>(c)]] = beta(c);
    step.intercept -= x_mean(c) * beta(c);
  }
  return step;
}

/// Applies one ridge step to the originally missing cells of its target.
/// Returns the largest absolute change.
double replay_step(const RidgeStep& step, Dataset& filled, const std::vector<std::uint8_t>& originally_missing) {
  const std::size_t f = filled.n_features();
  double change = 0.0;
  for (std::size_t i = 0; i < filled.n_instances(); ++i) {
    if (!originally_missing[i * f + step.target]) continue;
    double v = step.intercept;
    const auto row = filled.values.row(i);
    for (std::size_t j = 0; j < f; ++j) v += step.coefficients[j] * row[j];
    change = std::max(change, std::abs(v - filled.values(i, step.target)));
    filled.values(i, step.target) = v;
  }
  return change;
}

void fill_initial(const TransformRecipe& recipe, Dataset& data) {
  const std::size_t f = data.n_features();
  for (std::size_t i = 0; i < data.n_instances(); ++i)
    for (std::size_t j = 0; j < f; ++j)
      if (data.missing[i * f + j]) data.values(i, j) = recipe.imputers[j].value;
}

}  // namespace

TransformRecipe fit_imputer(const Dataset& train, ImputeMode mode, std::string fitted_on,
                            const IterativeSettings& settings) {
  const std::size_t n = train.n_instances();
  const std::size_t f = train.n_features();
  TransformRecipe recipe;
  recipe.fitted_on = std::move(fitted_on);
  recipe.feature_order = train.feature_names();
  recipe.kinds = train.feature_kinds();
  recipe.imputers.resize(f);

  // Fallback for entirely-missing categorical features.
  std::vector<double> all_categorical;
  for (std::size_t j = 0; j < f; ++j)
    if (recipe.kinds[j] == FeatureKind::categorical)
      for (std::size_t i = 0; i < n; ++i)
        if (!train.is_missing(i, j)) all_categorical.push_back(train.values(i, j));
  const double global_mode = all_categorical.empty() ? 0.0 : mode_of(all_categorical);

  std::vector<std::size_t> missing_per_feature(f, 0);
  for (std::size_t j = 0; j < f; ++j) {
    std::vector<double> observed;
    for (std::size_t i = 0; i < n; ++i) {
      if (train.is_missing(i, j)) ++missing_per_feature[j];
      else observed.push_back(train.values(i, j));
    }
    auto& entry = recipe.imputers[j];
    if (recipe.kinds[j] == FeatureKind::categorical) {
      entry.method = "mode";
      entry.levels = observed;
      std::sort(entry.levels.begin(), entry.levels.end());
      entry.levels.erase(std::unique(entry.levels.begin(), entry.levels.end()), entry.levels.end());
      if (observed.empty()) {
        warn("feature '" + recipe.feature_order[j] + "' is entirely missing in training data; imputing the most frequent category");
        entry.value = global_mode;
      } else {
        entry.value = mode_of(observed);
      }
    } else {
      entry.method = mode == ImputeMode::iterative ? "iterative" : "mean";
      if (observed.empty()) {
        warn("feature '" + recipe.feature_order[j] + "' is entirely missing in training data; imputing 0");
        entry.value = 0.0;
      } else {
        entry.value = mean(observed);
      }
    }
  }
  if (mode == ImputeMode::simple) return recipe;

  // Round-robin over quantitative features that have missing training
  // cells, fewest missing first. Features complete in training fall back
  // to their mean when missing elsewhere.
  std::vector<std::size_t> targets;
  for (std::size_t j = 0; j < f; ++j)
    if (recipe.kinds[j] == FeatureKind::quantitative && missing_per_feature[j] > 0 && missing_per_feature[j] < n)
      targets.push_back(j);
  std::stable_sort(targets.begin(), targets.end(),
                   [&](std::size_t a, std::size_t b) { return missing_per_feature[a] < missing_per_feature[b]; });
  if (targets.empty() || f < 2) return recipe;

  Dataset filled = train;
  fill_initial(recipe, filled);
  for (int round = 0; round < settings.max_rounds; ++round) {
    std::vector<RidgeStep> steps;
    double change = 0.0;
    for (auto t : targets) {
      steps.push_back(fit_ridge(filled, train.missing, t, settings.ridge_lambda));
      change = std::max(change, replay_step(steps.back(), filled, train.missing));
    }
    recipe.rounds.push_back(std::move(steps));
    if (change < settings.tolerance) break;
  }
  return recipe;
}

namespace {

void check_columns(const TransformRecipe& recipe, const Dataset& data) {
  std::vector<std::string> absent, extra;
  for (const auto& name : recipe.feature_order)
    if (!data.feature_index(name)) absent.push_back(name);
  for (const auto& meta : data.features)
    if (std::find(recipe.feature_order.begin(), recipe.feature_order.end(), meta.name) == recipe.feature_order.end())
      extra.push_back(meta.name);
  if (!absent.empty()) fail(ErrorKind::invalid_argument, "data is missing features required by the recipe: " + join(absent, ", "));
  if (!extra.empty()) fail(ErrorKind::invalid_argument, "data has features unknown to the recipe: " + join(extra, ", "));
}

}  // namespace

Dataset apply_imputer(const TransformRecipe& recipe, const Dataset& data) {
  check_columns(recipe, data);
  Dataset out = data.select_features(recipe.feature_order);
  const std::size_t f = out.n_features();
  for (std::size_t j = 0; j < f; ++j) {
    out.features[j].kind = recipe.kinds[j];
    if (recipe.kinds[j] != FeatureKind::categorical) continue;
    const auto& levels = recipe.imputers[j].levels;
    std::size_t unknown = 0;
    for (std::size_t i = 0; i < out.n_instances(); ++i) {
      if (out.is_missing(i, j)) continue;
      if (!std::binary_search(levels.begin(), levels.end(), out.values(i, j))) {
        out.set_cell(i, j, kNaN);
        ++unknown;
      }
    }
    if (unknown > 0)
      warn("feature '" + recipe.feature_order[j] + "': " + std::to_string(unknown) +
           " value(s) with a category unseen in training imputed as the mode");
  }
  if (out.missing_count() == 0) return out;

  const auto originally_missing = out.missing;
  fill_initial(recipe, out);
  for (const auto& round : recipe.rounds)
    for (const auto& step : round) replay_step(step, out, originally_missing);
  std::fill(out.missing.begin(), out.missing.end(), std::uint8_t{0});
  return out;
}

void fit_scaler(TransformRecipe& recipe, const Dataset& imputed_train) {
  check_columns(recipe, imputed_train);
  require(imputed_train.missing_count() == 0, "fit_scaler: impute before scaling");
  require(!imputed_train.scaled, "fit_scaler: data is already scaled");
  const Dataset data = imputed_train.select_features(recipe.feature_order);
  recipe.scalers.assign(data.n_features(), ScalerEntry{});
  for (std::size_t j = 0; j < data.n_features(); ++j) {
    if (recipe.kinds[j] != FeatureKind::quantitative) continue;
    auto& s = recipe.scalers[j];
    s.scaled = true;
    const auto column = data.values.column(j);
    if (column.empty()) continue;
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    if (*lo == *hi) {
      s.center = *lo;
      s.scale = 1.0;
      continue;
    }
    s.center = mean(column);
    double ss = 0.0;
    for (double v : column) ss += (v - s.center) * (v - s.center);
    const double sd = std::sqrt(ss / static_cast<double>(column.size()));
    s.scale = sd > 0.0 ? sd : 1.0;
  }
}

Dataset apply_scaler(const TransformRecipe& recipe, const Dataset& data) {
  require(!recipe.scalers.empty() || recipe.feature_order.empty(), "apply_scaler: recipe has no scaler");
  require(!data.scaled, "apply_scaler: data is already scaled");
  check_columns(recipe, data);
  Dataset out = data.select_features(recipe.feature_order);
  for (std::size_t j = 0; j < out.n_features(); ++j) {
    const auto& s = recipe.scalers[j];
    if (!s.scaled) continue;
    for (std::size_t i = 0; i < out.n_instances(); ++i)
      if (!out.is_missing(i, j)) out.values(i, j) = (out.values(i, j) - s.center) / s.scale;
  }
  out.scaled = true;
  return out;
}

Dataset apply_transform(const TransformRecipe& recipe, const Dataset& data) {
  return apply_scaler(recipe, apply_imputer(recipe, data));
}

nlohmann::json to_json(const TransformRecipe& recipe) {
  using nlohmann::json;
  json j;
  j["schema_version"] = TransformRecipe::kSchemaVersion;
  j["fitted_on"] = recipe.fitted_on;
  j["feature_order"] = recipe.feature_order;
  json kinds = json::array();
  for (auto k : recipe.kinds) kinds.push_back(to_string(k));
  j["kinds"] = kinds;
  json imputers = json::array();
  for (const auto& e : recipe.imputers) {
    json item{{"method", e.method}, {"value", e.value}};
    if (!e.levels.empty()) item["levels"] = e.levels;
    imputers.push_back(item);
  }
  j["imputers"] = imputers;
  json rounds = json::array();
  for (const auto& round : recipe.rounds) {
    json steps = json::array();
    for (const auto& s : round)
      steps.push_back({{"target", s.target}, {"intercept", s.intercept}, {"coefficients", s.coefficients}});
    rounds.push_back(steps);
  }
  j["iterative_rounds"] = rounds;
  json scalers = json::array();
  for (const auto& s : recipe.scalers) scalers.push_back({{"scaled", s.scaled}, {"center", s.center}, {"scale", s.scale}});
  j["scalers"] = scalers;
  return j;
}

TransformRecipe recipe_from_json(const nlohmann::json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version != TransformRecipe::kSchemaVersion)
    fail(ErrorKind::parse, "unsupported recipe schema_version " + std::to_string(version));
  TransformRecipe r;
  r.fitted_on = j.at("fitted_on").get<std::string>();
  r.feature_order = j.at("feature_order").get<std::vector<std::string>>();
  for (const auto& k : j.at("kinds")) r.kinds.push_back(feature_kind_from_string(k.get<std::string>()));
  for (const auto& e : j.at("imputers")) {
    ImputerEntry entry;
    entry.method = e.at("method").get<std::string>();
    entry.value = e.at("value").get<double>();
    if (e.contains("levels")) entry.levels = e.at("levels").get<std::vector<double>>();
    r.imputers.push_back(entry);
  }
  for (const auto& round : j.at("iterative_rounds")) {
    std::vector<RidgeStep> steps;
    for (const auto& s : round)
      steps.push_back({s.at("target").get<std::size_t>(), s.at("intercept").get<double>(),
                       s.at("coefficients").get<std::vector<double>>()});
    r.rounds.push_back(steps);
  }
  for (const auto& s : j.at("scalers"))
    r.scalers.push_back({s.at("scaled").get<bool>(), s.at("center").get<double>(), s.at("scale").get<double>()});
  if (r.kinds.size() != r.feature_order.size() || r.imputers.size() != r.feature_order.size())
    fail(ErrorKind::parse, "recipe: per-feature arrays disagree in length");
  return r;
}

}  // namespace tabml
