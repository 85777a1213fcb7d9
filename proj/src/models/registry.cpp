#include <algorithm>
#include <mutex>

#include "models/learners.hpp"
#include "tabml/models.hpp"

namespace tabml {

std::string to_string(const ParamValue& value) {
  if (const auto* i = std::get_if<long long>(&value)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&value)) return format_double(*d);
  return std::get<std::string>(value);
}

nlohmann::json to_json(const Hyperparameters& hp) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, value] : hp) std::visit([&](const auto& v) { j[name] = v; }, value);
  return j;
}

Hyperparameters hyperparameters_from_json(const nlohmann::json& j) {
  Hyperparameters hp;
  for (const auto& [name, v] : j.items()) {
    if (v.is_number_integer()) hp[name] = v.get<long long>();
    else if (v.is_number()) hp[name] = v.get<double>();
    else if (v.is_string()) hp[name] = v.get<std::string>();
    else fail(ErrorKind::parse, "hyperparameter '" + name + "' has an unsupported JSON type");
  }
  return hp;
}

namespace {

const ParamValue& lookup(const Hyperparameters& hp, const std::string& name) {
  auto it = hp.find(name);
  if (it == hp.end()) fail(ErrorKind::invalid_argument, "missing hyperparameter '" + name + "'");
  return it->second;
}

}  // namespace

long long get_int(const Hyperparameters& hp, const std::string& name) {
  const auto& v = lookup(hp, name);
  if (const auto* i = std::get_if<long long>(&v)) return *i;
  fail(ErrorKind::invalid_argument, "hyperparameter '" + name + "' must be an integer");
}

double get_real(const Hyperparameters& hp, const std::string& name) {
  const auto& v = lookup(hp, name);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<long long>(&v)) return static_cast<double>(*i);
  fail(ErrorKind::invalid_argument, "hyperparameter '" + name + "' must be a number");
}

const std::string& get_choice(const Hyperparameters& hp, const std::string& name) {
  const auto& v = lookup(hp, name);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  fail(ErrorKind::invalid_argument, "hyperparameter '" + name + "' must be a string");
}

bool ParamDomain::contains(const ParamValue& value) const {
  switch (type) {
    case Type::integer: {
      const auto* i = std::get_if<long long>(&value);
      return i && static_cast<double>(*i) >= lo && static_cast<double>(*i) <= hi;
    }
    case Type::real: {
      double v;
      if (const auto* d = std::get_if<double>(&value)) v = *d;
      else if (const auto* i = std::get_if<long long>(&value)) v = static_cast<double>(*i);
      else return false;
      return v >= lo && v <= hi;
    }
    case Type::categorical: {
      const auto* s = std::get_if<std::string>(&value);
      return s && std::find(choices.begin(), choices.end(), *s) != choices.end();
    }
  }
  return false;
}

namespace {

ParamDomain integer(std::string name, long long lo, long long hi) {
  return {std::move(name), ParamDomain::Type::integer, static_cast<double>(lo), static_cast<double>(hi), false, {}};
}
ParamDomain real(std::string name, double lo, double hi, bool log_scale) {
  return {std::move(name), ParamDomain::Type::real, lo, hi, log_scale, {}};
}
ParamDomain choice(std::string name, std::vector<std::string> choices) {
  return {std::move(name), ParamDomain::Type::categorical, 0, 0, false, std::move(choices)};
}

struct Entry {
  ClassifierSpec spec;
  ClassifierFactory factory;
};

struct Registry {
  std::mutex mutex;
  std::vector<std::string> order;
  std::map<std::string, Entry> entries;

  void add(ClassifierSpec spec, ClassifierFactory factory) {
    std::lock_guard lock(mutex);
    if (!entries.count(spec.algorithm_id)) order.push_back(spec.algorithm_id);
    const auto id = spec.algorithm_id;
    entries[id] = Entry{std::move(spec), std::move(factory)};
  }
};

void add_builtins(Registry& r) {
  using learners::make_decision_tree, learners::make_gradient_boosting, learners::make_genetic_programming,
      learners::make_knn, learners::make_lcs, learners::make_logistic_regression, learners::make_naive_bayes,
      learners::make_random_forest, learners::make_svm;

  r.add({"NB", "Naive Bayes", {}, false, {}, false}, make_naive_bayes);
  r.add({"LR", "Logistic Regression", {real("lambda", 1e-5, 1e2, true)}, true, {{"lambda", 1e-2}}, true},
        make_logistic_regression);
  r.add({"DT",
         "Decision Tree",
         {integer("max_depth", 1, 30), integer("min_samples_leaf", 1, 20)},
         true,
         {{"max_depth", 30LL}, {"min_samples_leaf", 1LL}},
         true},
        make_decision_tree);
  r.add({"RF",
         "Random Forest",
         {integer("n_estimators", 10, 1000), integer("max_depth", 1, 30), choice("max_features", {"sqrt", "log2", "all"})},
         true,
         {{"n_estimators", 100LL}, {"max_depth", 30LL}, {"max_features", std::string("sqrt")}},
         true},
        make_random_forest);
  r.add({"GB",
         "Gradient Boosting",
         {integer("n_estimators", 10, 500), real("learning_rate", 1e-3, 0.3, true), integer("max_depth", 1, 8)},
         true,
         {{"n_estimators", 100LL}, {"learning_rate", 0.1}, {"max_depth", 3LL}},
         true},
        make_gradient_boosting);
  r.add({"KNN",
         "K-Nearest Neighbors",
         {integer("n_neighbors", 1, 50), choice("weights", {"uniform", "distance"})},
         true,
         {{"n_neighbors", 5LL}, {"weights", std::string("uniform")}},
         false},
        make_knn);
  r.add({"SVM",
         "Support Vector Machine",
         {choice("kernel", {"linear", "poly", "rbf"}), real("C", 1e-3, 1e3, true), real("gamma", 1e-4, 1e1, true)},
         true,
         {{"kernel", std::string("rbf")}, {"C", 1.0}, {"gamma", 0.1}},
         false},
        make_svm);
  r.add({"GP",
         "Genetic Programming",
         {integer("population_size", 100, 1000), integer("generations", 10, 100), real("p_crossover", 0.5, 0.95, false)},
         true,
         {{"population_size", 500LL},
          {"generations", 20LL},
          {"p_crossover", 0.9},
          {"tournament_size", 20LL},
          {"parsimony", 0.001},
          {"max_depth", 17LL}},
         false},
        make_genetic_programming);
  r.add({"LCS",
         "Learning Classifier System",
         {},
         false,
         {{"nu", 1.0},
          {"population_size", 2000LL},
          {"iterations", 200000LL},
          {"theta_ga", 25LL},
          {"chi", 0.8},
          {"mu", 0.04},
          {"theta_sub", 20LL},
          {"acc_sub", 0.99},
          {"theta_del", 20LL},
          {"delta", 0.1},
          {"beta", 0.2}},
         true},
        make_lcs);
}

Registry& registry() {
  static Registry r;
  static std::once_flag once;
  std::call_once(once, [] { add_builtins(r); });
  return r;
}

const Entry& entry(const std::string& id) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  auto it = r.entries.find(id);
  if (it == r.entries.end()) fail(ErrorKind::config, "unknown algorithm '" + id + "'");
  return it->second;
}

}  // namespace

void register_classifier(ClassifierSpec spec, ClassifierFactory factory) { registry().add(std::move(spec), std::move(factory)); }

std::vector<std::string> builtin_algorithms() { return {"NB", "LR", "DT", "RF", "GB", "KNN", "SVM", "GP", "LCS"}; }

std::vector<std::string> registered_algorithms() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  return r.order;
}

bool is_registered(const std::string& id) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  return r.entries.count(id) > 0;
}

const ClassifierSpec& classifier_spec(const std::string& id) { return entry(id).spec; }

std::unique_ptr<Classifier> make_classifier(const std::string& id) { return entry(id).factory(); }

Hyperparameters complete_hyperparameters(const ClassifierSpec& spec, const Hyperparameters& overrides) {
  Hyperparameters hp = spec.defaults;
  for (const auto& [name, value] : overrides) {
    auto it = hp.find(name);
    if (it == hp.end())
      fail(ErrorKind::invalid_argument, spec.algorithm_id + ": unknown hyperparameter '" + name + "'");
    if (it->second.index() != value.index()) {
      const bool int_for_real = std::holds_alternative<double>(it->second) && std::holds_alternative<long long>(value);
      if (!int_for_real)
        fail(ErrorKind::invalid_argument, spec.algorithm_id + ": hyperparameter '" + name + "' has the wrong type");
      it->second = static_cast<double>(std::get<long long>(value));
      continue;
    }
    it->second = value;
  }
  for (const auto& d : spec.space)
    if (!d.contains(hp.at(d.name)))
      fail(ErrorKind::invalid_argument, spec.algorithm_id + ": hyperparameter '" + d.name + "' = " +
                                            to_string(hp.at(d.name)) + " is outside its domain");
  return hp;
}

std::vector<double> TrainedModel::predict_proba(const Dataset& data) const {
  const Dataset view = data.select_features(feature_subset);
  require(view.missing_count() == 0, "predict_proba: data has missing values; apply the recipe first");
  return classifier->predict_proba(view.values);
}

TrainedModel fit_model(const std::string& algorithm_id, const Hyperparameters& hp, const Dataset& train,
                       std::uint64_t seed, int fold, const FitOptions& options) {
  const auto& spec = classifier_spec(algorithm_id);
  std::size_t positives = 0;
  for (int y : train.outcome) {
    require(y == 0 || y == 1, "fit: outcome must be 0/1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == train.n_instances())
    fail(ErrorKind::invalid_argument, algorithm_id + ": training data contains a single class");
  require(train.missing_count() == 0, "fit: training data has missing values");
  TrainedModel model;
  model.algorithm_id = algorithm_id;
  model.hyperparameters = complete_hyperparameters(spec, hp);
  model.feature_subset = train.feature_names();
  model.fold = fold;
  model.train_seed = seed;
  auto c = make_classifier(algorithm_id);
  c->fit(train.values, train.outcome, train.feature_kinds(), model.hyperparameters, seed, options);
  model.classifier = std::move(c);
  return model;
}

std::string serialize_model(const TrainedModel& model) {
  nlohmann::json j;
  j["schema_version"] = TrainedModel::kSchemaVersion;
  j["algorithm_id"] = model.algorithm_id;
  j["hyperparameters"] = to_json(model.hyperparameters);
  j["feature_subset"] = model.feature_subset;
  j["fold"] = model.fold;
  j["train_seed"] = model.train_seed;
  j["parameters"] = base64_encode(model.classifier->parameters().dump());
  return j.dump(1) + "\n";
}

TrainedModel deserialize_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("model archive is not valid JSON: ") + e.what());
  }
  const int version = j.at("schema_version").get<int>();
  if (version != TrainedModel::kSchemaVersion)
    fail(ErrorKind::parse, "unsupported model schema_version " + std::to_string(version));
  TrainedModel m;
  m.algorithm_id = j.at("algorithm_id").get<std::string>();
  m.hyperparameters = hyperparameters_from_json(j.at("hyperparameters"));
  m.feature_subset = j.at("feature_subset").get<std::vector<std::string>>();
  m.fold = j.at("fold").get<int>();
  m.train_seed = j.at("train_seed").get<std::uint64_t>();
  auto c = make_classifier(m.algorithm_id);
  c->load_parameters(nlohmann::json::parse(base64_decode(j.at("parameters").get<std::string>())));
  m.classifier = std::move(c);
  return m;
}

namespace learners {

std::vector<int> stratified_folds(std::span<const int> y, int k, Rng& rng) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  std::vector<int> fold(y.size(), 0);
  std::size_t pos = 0;
  for (auto& cls : by_class) {
    rng.shuffle(cls);
    for (auto i : cls) fold[i] = static_cast<int>(pos++ % static_cast<std::size_t>(k));
  }
  return fold;
}

}  // namespace learners

}  // namespace tabml
