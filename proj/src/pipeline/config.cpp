#include <algorithm>
#include <charconv>
#include <cstdlib>

#include "tabml/pipeline.hpp"

namespace tabml {

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys{
      {"data_dir", ""},
      {"experiment_name", "experiment"},
      {"output_dir", ""},
      {"outcome", "Class"},
      {"instance_id", ""},
      {"match_group", ""},
      {"missing_token", "NA"},
      {"categorical_features", ""},
      {"quantitative_features", ""},
      {"exclude_features", ""},
      {"type_cutoff", "10"},
      {"cv_folds", "10"},
      {"cv_strategy", "stratified"},
      {"impute", "iterative"},
      {"fs_max_features", "0"},
      {"fs_instance_cap", "2000"},
      {"turf", "false"},
      {"turf_pct", "0.5"},
      {"turf_target", "100"},
      {"mi_bins", "10"},
      {"algorithms", "NB,LR,DT,RF,GB,KNN,SVM,GP,LCS"},
      {"n_trials", "200"},
      {"sampler", "tpe"},
      {"nested_folds", "3"},
      {"primary_metric", "balanced_accuracy"},
      {"cfibp_weight", "roc_auc"},
      {"alpha", "0.05"},
      {"importance", "permutation"},
      {"permutation_repeats", "10"},
      {"top_features", "40"},
      {"seed", ""},
      {"max_jobs", "1"},
  };
  return keys;
}

namespace {

[[noreturn]] void config_error(const std::string& message) { fail(ErrorKind::config, "config: " + message); }

bool known_key(const std::string& key) {
  if (key.rfind("hp.", 0) == 0) return true;
  for (const auto& [k, v] : config_keys())
    if (k == key) return true;
  return false;
}

std::string unquote(std::string value) {
  if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') || (value.front() == '\'' && value.back() == '\'')))
    return value.substr(1, value.size() - 2);
  return value;
}

std::string value_of(const PipelineConfig& c, const std::string& key) {
  if (auto it = c.entries.find(key); it != c.entries.end()) return it->second;
  for (const auto& [k, v] : config_keys())
    if (k == key) return v;
  return {};
}

long long as_int(const std::string& key, const std::string& text, long long lo, long long hi) {
  long long v = 0;
  const auto t = trim(text);
  auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
    config_error(key + ": expected an integer, got '" + text + "'");
  if (v < lo || v > hi) config_error(key + ": " + t + " is outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v;
}

double as_real(const std::string& key, const std::string& text, double lo, double hi) {
  bool ok = false;
  const double v = parse_double(text, &ok);
  if (!ok) config_error(key + ": expected a number, got '" + text + "'");
  if (!(v >= lo && v <= hi)) config_error(key + ": " + text + " is outside [" + format_double(lo) + ", " + format_double(hi) + "]");
  return v;
}

bool as_bool(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  config_error(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> as_list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& part : split(text, ',')) {
    auto t = trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

Metric as_metric(const std::string& key, const std::string& text) {
  const auto m = metric_from_name(trim(text));
  if (!m) config_error(key + ": unknown metric '" + text + "'");
  return *m;
}

template <class F>
auto converted(const std::string& key, F f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    config_error(key + ": " + e.what());
  }
}

ParamValue hyperparameter_value(const std::string& algorithm, const std::string& name, const std::string& text) {
  const auto& spec = classifier_spec(algorithm);
  const auto it = spec.defaults.find(name);
  if (it == spec.defaults.end()) config_error("hp." + algorithm + "." + name + ": unknown hyperparameter");
  const auto key = "hp." + algorithm + "." + name;
  if (std::holds_alternative<long long>(it->second))
    return as_int(key, text, std::numeric_limits<long long>::min(), std::numeric_limits<long long>::max());
  if (std::holds_alternative<double>(it->second))
    return as_real(key, text, -std::numeric_limits<double>::max(), std::numeric_limits<double>::max());
  return trim(text);
}

}  // namespace

void resolve(PipelineConfig& c) {
  for (const auto& [key, value] : c.entries)
    if (!known_key(key)) config_error("unknown key '" + key + "'");

  c.data_dir = value_of(c, "data_dir");
  c.experiment_name = value_of(c, "experiment_name");
  if (c.experiment_name.empty() || c.experiment_name.find('/') != std::string::npos)
    config_error("experiment_name must be a non-empty name without '/'");
  c.output_dir = value_of(c, "output_dir");
  if (c.output_dir.empty()) {
    const char* root = std::getenv("TABML_OUTPUT_ROOT");
    c.output_dir = root && *root ? std::filesystem::path(root) : std::filesystem::path("tabml_output");
  }
  c.dataset.outcome = value_of(c, "outcome");
  c.dataset.instance_id = value_of(c, "instance_id");
  c.dataset.match_group = value_of(c, "match_group");
  c.dataset.missing_token = value_of(c, "missing_token");
  if (c.dataset.outcome.empty()) config_error("outcome must name a column");
  c.categorical_features = as_list(value_of(c, "categorical_features"));
  c.quantitative_features = as_list(value_of(c, "quantitative_features"));
  c.excluded_features = as_list(value_of(c, "exclude_features"));
  c.type_cutoff = static_cast<int>(as_int("type_cutoff", value_of(c, "type_cutoff"), 2, 1000000));

  c.cv_folds = static_cast<int>(as_int("cv_folds", value_of(c, "cv_folds"), 2, 1000));
  c.cv_strategy = converted("cv_strategy", [&] { return cv_strategy_from_string(trim(value_of(c, "cv_strategy"))); });
  if (c.cv_strategy == CvStrategy::matched && c.dataset.match_group.empty())
    config_error("cv_strategy = matched requires match_group");
  c.impute = converted("impute", [&] { return impute_mode_from_string(trim(value_of(c, "impute"))); });

  const auto cap = as_int("fs_max_features", value_of(c, "fs_max_features"), 0, 100000000);
  c.fs_max_features = cap > 0 ? std::optional<std::size_t>(static_cast<std::size_t>(cap)) : std::nullopt;
  c.fs_instance_cap = static_cast<std::size_t>(as_int("fs_instance_cap", value_of(c, "fs_instance_cap"), 3, 100000000));
  c.turf = as_bool("turf", value_of(c, "turf"));
  c.turf_pct = as_real("turf_pct", value_of(c, "turf_pct"), 0.0, 0.99);
  if (!(c.turf_pct > 0)) config_error("turf_pct must be positive");
  c.turf_target = static_cast<std::size_t>(as_int("turf_target", value_of(c, "turf_target"), 1, 100000000));
  c.mi_bins = static_cast<int>(as_int("mi_bins", value_of(c, "mi_bins"), 2, 1000));

  c.algorithms.clear();
  const auto requested = as_list(value_of(c, "algorithms"));
  if (requested.empty()) config_error("algorithms: at least one algorithm must be enabled");
  for (const auto& a : requested) {
    if (!is_registered(a)) config_error("algorithms: unknown algorithm '" + a + "'");
    if (std::find(c.algorithms.begin(), c.algorithms.end(), a) != c.algorithms.end())
      config_error("algorithms: '" + a + "' listed twice");
  }
  // Canonical roster order first, then any externally registered ids.
  for (const auto& a : registered_algorithms())
    if (std::find(requested.begin(), requested.end(), a) != requested.end()) c.algorithms.push_back(a);

  c.fixed_hyperparameters.clear();
  for (const auto& [key, value] : c.entries) {
    if (key.rfind("hp.", 0) != 0) continue;
    const auto rest = key.substr(3);
    const auto dot = rest.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == rest.size())
      config_error(key + ": expected hp.<ALGORITHM>.<parameter>");
    const auto algorithm = rest.substr(0, dot);
    const auto name = rest.substr(dot + 1);
    if (!is_registered(algorithm)) config_error(key + ": unknown algorithm '" + algorithm + "'");
    c.fixed_hyperparameters[algorithm][name] = hyperparameter_value(algorithm, name, value);
  }
  for (const auto& [algorithm, hp] : c.fixed_hyperparameters)
    converted("hp." + algorithm, [&] { return complete_hyperparameters(classifier_spec(algorithm), hp); });

  c.n_trials = static_cast<int>(as_int("n_trials", value_of(c, "n_trials"), 1, 100000));
  c.sampler = converted("sampler", [&] { return sampler_from_string(trim(value_of(c, "sampler"))); });
  c.nested_folds = static_cast<int>(as_int("nested_folds", value_of(c, "nested_folds"), 2, 100));

  c.primary_metric = as_metric("primary_metric", value_of(c, "primary_metric"));
  c.cfibp_weight = as_metric("cfibp_weight", value_of(c, "cfibp_weight"));
  if (c.cfibp_weight != Metric::balanced_accuracy && c.cfibp_weight != Metric::roc_auc)
    config_error("cfibp_weight must be balanced_accuracy or roc_auc");
  c.alpha = as_real("alpha", value_of(c, "alpha"), 0.0, 1.0);
  const auto importance = trim(value_of(c, "importance"));
  if (importance == "permutation") c.importance = ImportanceSource::permutation;
  else if (importance == "builtin") c.importance = ImportanceSource::builtin;
  else config_error("importance must be permutation or builtin");
  c.permutation_repeats = static_cast<int>(as_int("permutation_repeats", value_of(c, "permutation_repeats"), 1, 100000));
  c.top_features = static_cast<std::size_t>(as_int("top_features", value_of(c, "top_features"), 1, 100000));

  const auto seed = trim(value_of(c, "seed"));
  if (seed.empty()) c.seed.reset();
  else c.seed = static_cast<std::uint64_t>(as_int("seed", seed, 0, std::numeric_limits<long long>::max()));
  c.max_jobs = static_cast<int>(as_int("max_jobs", value_of(c, "max_jobs"), 1, 1024));
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig c;
  c.source_text = std::string(text);
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = raw;
    // A '#' inside quotes is kept.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error("line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = unquote(trim(line.substr(eq + 1)));
    if (key.empty()) config_error("line " + std::to_string(line_no) + ": empty key");
    if (!known_key(key)) config_error("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (c.entries.count(key)) config_error("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    c.entries[key] = value;
  }
  resolve(c);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    config_error(e.what());
  }
  return parse_config(text);
}

void set_option(PipelineConfig& config, const std::string& key, const std::string& value) {
  if (!known_key(key)) config_error("unknown key '" + key + "'");
  // A rejected value leaves the config untouched.
  PipelineConfig next = config;
  next.entries[key] = value;
  next.overrides.emplace_back(key, value);
  resolve(next);
  config = std::move(next);
}

std::vector<std::pair<std::string, std::string>> effective_settings(const PipelineConfig& config) {
  std::map<std::string, std::string> all;
  for (const auto& [k, v] : config_keys()) all[k] = v;
  for (const auto& [k, v] : config.entries) all[k] = v;
  all["output_dir"] = config.output_dir.string();
  return {all.begin(), all.end()};
}

}  // namespace tabml
