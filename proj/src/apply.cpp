#include "tabml/apply.hpp"

#include <algorithm>
#include <atomic>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "pipeline/layout.hpp"
#include "pipeline/stages.hpp"
#include "report/builders.hpp"
#include "tabml/common.hpp"
#include "tabml/log.hpp"
#include "tabml/pipeline.hpp"

namespace tabml {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

PipelineConfig experiment_config(const json& manifest) {
  auto c = parse_config(manifest.at("config_snapshot").get<std::string>());
  for (const auto& o : manifest.at("overrides")) set_option(c, o.at("key").get<std::string>(), o.at("value").get<std::string>());
  return c;
}

/// Adds an all-missing outcome column when the file has none.
std::string with_outcome(const std::string& text, const DatasetConfig& cfg) {
  auto records = parse_csv_records(text);
  if (records.empty()) fail(ErrorKind::parse, "replication data is empty");
  if (std::find(records[0].begin(), records[0].end(), cfg.outcome) != records[0].end()) return text;
  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].push_back(i == 0 ? cfg.outcome : cfg.missing_token);
    std::vector<std::string> fields;
    for (const auto& f : records[i]) fields.push_back(csv_field(f));
    out += join(fields, ",") + "\n";
  }
  return out;
}

}  // namespace

ApplyResult apply_models(const ApplyOptions& o) {
  const fs::path exp = o.experiment_dir;
  if (!fs::exists(exp / layout::manifest()))
    fail(ErrorKind::config, "no manifest.json in experiment directory '" + exp.string() + "'");
  const auto manifest = json::parse(read_file(exp / layout::manifest()));
  const auto c = experiment_config(manifest);

  std::vector<std::string> datasets;
  for (const auto& d : manifest.at("datasets")) datasets.push_back(d.at("name").get<std::string>());
  ApplyResult r;
  if (!o.dataset.empty()) {
    if (std::find(datasets.begin(), datasets.end(), o.dataset) == datasets.end())
      fail(ErrorKind::config, "experiment has no dataset '" + o.dataset + "'");
    r.training_dataset = o.dataset;
  } else if (datasets.size() == 1) {
    r.training_dataset = datasets.front();
  } else {
    fail(ErrorKind::config, "experiment holds " + std::to_string(datasets.size()) +
                                " datasets; choose one with --dataset (" + join(datasets, ", ") + ")");
  }
  const auto& ds = r.training_dataset;
  r.replication = o.data.stem().string();
  r.output_dir = exp / "applymodel" / r.replication;
  const fs::path& out = r.output_dir;
  fs::remove_all(out);

  // Feature kinds and order come from the training data.
  std::vector<std::string> features, categorical, quantitative;
  const auto types = parse_csv_records(read_file(exp / layout::feature_types(ds)));
  for (std::size_t i = 1; i < types.size(); ++i) {
    features.push_back(types[i][0]);
    (feature_kind_from_string(types[i][1]) == FeatureKind::categorical ? categorical : quantitative).push_back(types[i][0]);
  }

  std::string text = read_file(o.data);
  if (o.predictions_only) text = with_outcome(text, c.dataset);
  auto data = parse_csv(text, c.dataset, r.replication);
  std::vector<std::string> missing;
  for (const auto& f : features)
    if (!data.feature_index(f)) missing.push_back(f);
  if (!missing.empty())
    fail(ErrorKind::invalid_argument, "replication data lacks feature column(s): " + join(missing, ", "));
  data = with_feature_types(data.select_features(features), 2, categorical, quantitative);
  if (!o.predictions_only) {
    const auto before = data.n_instances();
    data = clean(data);
    if (data.n_instances() < before)
      warn("replication data: dropped " + std::to_string(before - data.n_instances()) + " instance(s) without an outcome");
    if (data.n_instances() == 0) fail(ErrorKind::invalid_argument, "replication data has no labelled instance");
  }
  r.instances = data.n_instances();

  std::vector<std::pair<std::string, int>> models;
  for (const auto& a : c.algorithms)
    for (int f = 1; f <= c.cv_folds; ++f) models.emplace_back(a, f);
  r.models = models.size();

  const fs::path eval = "evaluation";
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::string error;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < models.size();) {
      const auto& [a, f] = models[i];
      try {
        const auto model = deserialize_model(read_file(exp / layout::model(ds, a, f)));
        const auto recipe = recipe_from_json(json::parse(read_file(exp / layout::recipe(ds, f))));
        if (o.predictions_only) {
          stages::write_predictions(model, recipe, data, out, eval);
        } else {
          stages::EvaluateOptions eo;
          eo.importance = false;
          stages::evaluate_model(model, recipe, data, out, eval, eo);
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (error.empty()) error = layout::model_tag(a, f) + ": " + e.what();
        next = models.size();
      }
    }
  };
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, o.max_jobs)), models.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (!error.empty()) fail(ErrorKind::job_failed, "apply failed for " + error);

  json m;
  m["experiment"] = c.experiment_name;
  m["training_dataset"] = ds;
  m["replication"] = r.replication;
  m["data_file"] = o.data.string();
  m["data_checksum"] = hex64(fnv1a64(read_file(o.data)));
  m["predictions_only"] = o.predictions_only;
  m["instances"] = r.instances;
  m["models"] = r.models;

  report::Document doc;
  if (o.predictions_only) {
    doc.title = "Replication predictions: " + r.replication;
    doc.paragraph("Predicted probabilities of class 1 for " + std::to_string(r.instances) + " instance(s) from " +
                  std::to_string(r.models) + " models of dataset '" + ds + "', one file per model under " +
                  "evaluation/predictions/. No outcome was used, so no metric is reported.");
  } else {
    stages::AggregateOptions ao;
    ao.algorithms = c.algorithms;
    ao.folds = c.cv_folds;
    ao.alpha = c.alpha;
    ao.cfibp_weight = c.cfibp_weight;
    stages::aggregate_evaluations(out, eval, ao);
    report::EvaluationFigures figs{c.algorithms, c.cv_folds, c.top_features, false};
    report::render_evaluation_figures(out, eval, "figures", r.replication, figs);
    doc = report::apply_report(out, {c.experiment_name, ds, r.replication, c.algorithms, c.cv_folds, c.alpha});
  }
  stages::write_artifact(out, layout::summary_md(), report::to_markdown(doc));
  stages::write_artifact(out, layout::summary_html(), report::to_html(doc));
  m["warnings"] = drain_warnings();
  stages::write_artifact(out, layout::manifest(), m.dump(1) + "\n");
  return r;
}

}  // namespace tabml
