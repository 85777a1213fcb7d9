#include "pipeline/stages.hpp"

#include <algorithm>
#include <map>

#include "pipeline/layout.hpp"
#include "tabml/log.hpp"
#include "tabml/report.hpp"

namespace tabml::stages {

using nlohmann::json;

void write_artifact(const fs::path& root, const fs::path& rel, std::string_view content) {
  write_file_atomic(root / rel, content);
}

std::string read_artifact(const fs::path& root, const fs::path& rel) { return read_file(root / rel); }

Dataset load_typed(const fs::path& csv, const fs::path& feature_types_csv, const DatasetConfig& config) {
  auto data = load_csv(csv, config);
  std::vector<std::string> categorical, quantitative;
  const auto records = parse_csv_records(read_file(feature_types_csv));
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() < 2) fail(ErrorKind::parse, "feature type table: malformed line " + std::to_string(i + 1));
    (feature_kind_from_string(records[i][1]) == FeatureKind::categorical ? categorical : quantitative)
        .push_back(records[i][0]);
  }
  return with_feature_types(std::move(data), 2, categorical, quantitative);
}

namespace {

std::vector<std::string> present(const Dataset& d, const std::vector<std::string>& names, const char* what) {
  std::vector<std::string> out;
  for (const auto& n : names) {
    if (d.feature_index(n)) out.push_back(n);
    else warn(std::string(what) + " '" + n + "' is not a feature of dataset '" + d.name + "'; ignored there");
  }
  return out;
}

std::string types_csv(const Dataset& d) {
  std::string out = "feature,kind,unique_count,min,max\n";
  for (const auto& f : d.features) {
    const bool q = f.kind == FeatureKind::quantitative;
    out += csv_field(f.name) + "," + to_string(f.kind) + "," + std::to_string(f.observed_unique_count) + "," +
           (q && std::isfinite(f.observed_min) ? format_double(f.observed_min) : "") + "," +
           (q && std::isfinite(f.observed_max) ? format_double(f.observed_max) : "") + "\n";
  }
  return out;
}

Dataset fold_data(const PipelineConfig& c, const fs::path& root, const std::string& ds, int fold, bool train) {
  return load_typed(root / (train ? layout::fold_train(ds, fold) : layout::fold_test(ds, fold)),
                    root / layout::feature_types(ds), c.dataset);
}

TransformRecipe load_recipe(const fs::path& root, const std::string& ds, int fold) {
  return recipe_from_json(json::parse(read_artifact(root, layout::recipe(ds, fold))));
}

std::uint64_t base_seed(const PipelineConfig& c) {
  if (!c.seed) fail(ErrorKind::config, "config: seed is mandatory");
  return *c.seed;
}

std::string curve_csv(const Curve& curve) {
  std::string out = curve.kind == CurveKind::roc ? "fpr,tpr\n" : "recall,precision\n";
  for (const auto& [x, y] : curve.points) out += format_double(x) + "," + format_double(y) + "\n";
  return out;
}

}  // namespace

void eda(const PipelineConfig& c, const fs::path& root, const std::string& ds, const fs::path& file) {
  auto raw = load_csv(file, c.dataset);
  raw.name = ds;
  const auto categorical = present(raw, c.categorical_features, "categorical override");
  const auto quantitative = present(raw, c.quantitative_features, "quantitative override");
  const auto excluded = present(raw, c.excluded_features, "excluded feature");
  raw = with_feature_types(std::move(raw), c.type_cutoff, categorical, quantitative);
  const auto cleaned = clean(raw, excluded);
  const auto summary = eda_summary(cleaned);

  std::size_t n_categorical = 0;
  for (const auto& f : cleaned.features) n_categorical += f.kind == FeatureKind::categorical;
  std::string s = "statistic,value\n";
  s += "instances," + std::to_string(summary.instance_count) + "\n";
  s += "features," + std::to_string(summary.feature_count) + "\n";
  s += "categorical_features," + std::to_string(n_categorical) + "\n";
  s += "quantitative_features," + std::to_string(summary.feature_count - n_categorical) + "\n";
  s += "missing_cells," + std::to_string(summary.missing_cell_count) + "\n";
  s += "class_0," + std::to_string(summary.class_counts.first) + "\n";
  s += "class_1," + std::to_string(summary.class_counts.second) + "\n";
  s += "removed_instances," + std::to_string(raw.n_instances() - cleaned.n_instances()) + "\n";
  s += "excluded_features," + std::to_string(raw.n_features() - cleaned.n_features()) + "\n";

  std::string uni = "feature,test,statistic,p_value\n";
  for (const auto& u : summary.univariate_results)
    uni += csv_field(u.feature) + "," + u.test_name + "," + format_double(u.statistic) + "," + format_double(u.p_value) + "\n";

  const auto names = cleaned.feature_names();
  std::string corr = "feature";
  for (const auto& n : names) corr += "," + csv_field(n);
  corr += "\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    corr += csv_field(names[i]);
    for (std::size_t j = 0; j < names.size(); ++j) corr += "," + format_double(summary.feature_correlations(i, j));
    corr += "\n";
  }

  write_artifact(root, layout::cleaned(ds), to_csv(cleaned, c.dataset));
  write_artifact(root, layout::feature_types(ds), types_csv(cleaned));
  write_artifact(root, layout::eda_summary(ds), s);
  write_artifact(root, layout::univariate(ds), uni);
  write_artifact(root, layout::correlations(ds), corr);
  write_artifact(root, layout::class_counts_svg(ds),
                 report::bar_chart("Class counts: " + ds, "instances", {"class 0", "class 1"},
                                   {static_cast<double>(summary.class_counts.first),
                                    static_cast<double>(summary.class_counts.second)}));
}

void partition(const PipelineConfig& c, const fs::path& root, const std::string& ds) {
  const auto data = load_typed(root / layout::cleaned(ds), root / layout::feature_types(ds), c.dataset);
  const auto split = make_cv(data, c.cv_folds, c.cv_strategy, derive_seed(base_seed(c), {ds, "cv"}));
  write_artifact(root, layout::split(ds), to_json(split).dump(1) + "\n");
  for (std::size_t f = 0; f < split.folds.size(); ++f) {
    const int fold = static_cast<int>(f) + 1;
    write_artifact(root, layout::fold_train(ds, fold), to_csv(data.select_rows(split.folds[f].train), c.dataset));
    write_artifact(root, layout::fold_test(ds, fold), to_csv(data.select_rows(split.folds[f].test), c.dataset));
  }
}

void transform(const PipelineConfig& c, const fs::path& root, const std::string& ds, int fold) {
  const auto train = fold_data(c, root, ds, fold, true);
  auto recipe = fit_imputer(train, c.impute, layout::fold_tag(fold));
  fit_scaler(recipe, apply_imputer(recipe, train));
  write_artifact(root, layout::recipe(ds, fold), to_json(recipe).dump(1) + "\n");
}

void importance(const PipelineConfig& c, const fs::path& root, const std::string& ds, int fold) {
  const auto recipe = load_recipe(root, ds, fold);
  const auto train = apply_transform(recipe, fold_data(c, root, ds, fold, true));
  FeatureScores s;
  s.fold = fold;
  s.features = train.feature_names();
  s.mi_scores = mutual_info(train, c.mi_bins);
  MultiSurfOptions options;
  options.instance_cap = c.fs_instance_cap;
  options.seed = derive_seed(base_seed(c), {ds, layout::fold_tag(fold), "multisurf"});
  if (c.turf) {
    const int iterations = turf_default_iterations(train.n_features(), c.turf_target);
    std::size_t used = 0;
    const auto r = turf(
        train, [&](const Dataset& d) { return multisurf(d, options, &used); }, c.turf_pct, iterations);
    s.multisurf_scores = r.scores;
    s.instances_used = used;
    // Features dropped by TuRF cannot be picked by the MultiSURF side.
    for (std::size_t j = 0; j < r.scores.size(); ++j)
      if (r.rounds_survived[j] < iterations) s.multisurf_scores[j] = std::min(s.multisurf_scores[j], 0.0);
  } else {
    s.multisurf_scores = multisurf(train, options, &s.instances_used);
  }
  write_artifact(root, layout::scores(ds, fold), to_csv(s));
}

void selection(const PipelineConfig& c, const fs::path& root, const std::string& ds, int fold) {
  auto s = feature_scores_from_csv(read_artifact(root, layout::scores(ds, fold)), fold);
  s.selected_features = collective_select(s.features, s.mi_scores, s.multisurf_scores, c.fs_max_features);
  if (s.selected_features.empty())
    warn("dataset '" + ds + "' " + layout::fold_tag(fold) +
         ": no feature scored above zero; models of this fold use every feature");
  write_artifact(root, layout::selected(ds, fold), to_csv(s));
}

ClassifierSpec effective_spec(const PipelineConfig& c, const std::string& alg) {
  ClassifierSpec spec = classifier_spec(alg);
  const auto it = c.fixed_hyperparameters.find(alg);
  if (it == c.fixed_hyperparameters.end()) return spec;
  for (const auto& [name, value] : it->second) {
    spec.defaults[name] = value;
    std::erase_if(spec.space, [&](const ParamDomain& d) { return d.name == name; });
  }
  if (spec.space.empty()) spec.tunable = false;
  return spec;
}

void training(const PipelineConfig& c, const fs::path& root, const std::string& ds, const std::string& alg, int fold) {
  const auto recipe = load_recipe(root, ds, fold);
  auto train = apply_transform(recipe, fold_data(c, root, ds, fold, true));
  const auto s = feature_scores_from_csv(read_artifact(root, layout::selected(ds, fold)), fold);
  if (!s.selected_features.empty()) train = train.select_features(s.selected_features);

  const auto spec = effective_spec(c, alg);
  SweepOptions options;
  options.n_trials = c.n_trials;
  options.sampler = c.sampler;
  options.nested_folds = c.nested_folds;
  options.seed = derive_seed(base_seed(c), {ds, layout::fold_tag(fold), alg, "hpo"});
  const auto sweep = optimize(spec, train, options);
  const auto model = fit_model(alg, sweep.best_configuration, train,
                               derive_seed(base_seed(c), {ds, layout::fold_tag(fold), alg, "train"}), fold);

  write_artifact(root, layout::model(ds, alg, fold), serialize_model(model));
  write_artifact(root, layout::trials(ds, alg, fold), trials_to_csv(spec, sweep));
  write_artifact(root, layout::structure(ds, alg, fold), model.classifier->describe(model.feature_subset));
}

void evaluate_model(const TrainedModel& model, const TransformRecipe& recipe, const Dataset& raw, const fs::path& root,
                    const fs::path& eval_dir, const EvaluateOptions& options) {
  const auto test = apply_transform(recipe, raw);
  const auto probs = model.predict_proba(test);
  const auto& y = test.outcome;
  const auto metrics = metric_set(confusion(probs, y), probs, y);
  const auto roc = roc_curve(probs, y);
  const auto prc = prc_curve(probs, y);

  json j;
  j["algorithm"] = model.algorithm_id;
  j["fold"] = model.fold;
  j["instances"] = y.size();
  j["positives"] = std::count(y.begin(), y.end(), 1);
  json values = json::object(), flags = json::object();
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    const auto name = std::string(metric_names()[m]);
    values[name] = metrics.values[m];
    if (metrics.flags[m] != MetricFlag::none)
      flags[name] = metrics.flags[m] == MetricFlag::undefined ? "undefined" : "infinite";
  }
  j["metrics"] = values;
  j["flags"] = flags;
  const auto& a = model.algorithm_id;
  const int f = model.fold;
  write_artifact(root, layout::fold_eval(eval_dir, a, f), j.dump(1) + "\n");

  std::string pred = "row,instance_id,label,probability,prediction\n";
  for (std::size_t i = 0; i < probs.size(); ++i)
    pred += std::to_string(i) + "," + (test.instance_ids.empty() ? std::string() : csv_field(test.instance_ids[i])) + "," +
            std::to_string(y[i]) + "," + format_double(probs[i]) + "," + (probs[i] >= 0.5 ? "1" : "0") + "\n";
  write_artifact(root, layout::predictions(eval_dir, a, f), pred);
  write_artifact(root, layout::curve(eval_dir, a, f, CurveKind::roc), curve_csv(roc));
  write_artifact(root, layout::curve(eval_dir, a, f, CurveKind::prc), curve_csv(prc));

  if (!options.importance) return;
  const auto all = test.feature_names();
  const auto perm = permutation_importance(model, test, all, Metric::balanced_accuracy, options.permutation_repeats,
                                           options.seed);
  std::vector<std::string> builtin(all.size());
  if (const auto b = model.builtin_importance()) {
    std::fill(builtin.begin(), builtin.end(), "0");
    for (std::size_t k = 0; k < model.feature_subset.size(); ++k) {
      const auto it = std::find(all.begin(), all.end(), model.feature_subset[k]);
      builtin[static_cast<std::size_t>(it - all.begin())] = format_double((*b)[k]);
    }
  }
  std::string imp = "feature,permutation,builtin\n";
  for (std::size_t k = 0; k < all.size(); ++k)
    imp += csv_field(all[k]) + "," + format_double(perm[k]) + "," + builtin[k] + "\n";
  write_artifact(root, layout::importance(eval_dir, a, f), imp);
}

void write_predictions(const TrainedModel& model, const TransformRecipe& recipe, const Dataset& raw,
                       const fs::path& root, const fs::path& eval_dir) {
  const auto data = apply_transform(recipe, raw);
  const auto probs = model.predict_proba(data);
  std::string pred = "row,instance_id,probability,prediction\n";
  for (std::size_t i = 0; i < probs.size(); ++i)
    pred += std::to_string(i) + "," + (data.instance_ids.empty() ? std::string() : csv_field(data.instance_ids[i])) +
            "," + format_double(probs[i]) + "," + (probs[i] >= 0.5 ? "1" : "0") + "\n";
  write_artifact(root, layout::predictions(eval_dir, model.algorithm_id, model.fold), pred);
}

void evaluation(const PipelineConfig& c, const fs::path& root, const std::string& ds, const std::string& alg, int fold) {
  const auto model = deserialize_model(read_artifact(root, layout::model(ds, alg, fold)));
  EvaluateOptions options;
  options.permutation_repeats = c.permutation_repeats;
  options.seed = derive_seed(base_seed(c), {ds, layout::fold_tag(fold), alg, "permutation"});
  evaluate_model(model, load_recipe(root, ds, fold), fold_data(c, root, ds, fold, false), root, layout::evaluation(ds),
                 options);
}

std::string metrics_to_csv(const std::vector<FoldRecord>& records) {
  std::string out = "algorithm,fold";
  for (const auto& n : metric_names()) out += "," + std::string(n);
  out += ",flags\n";
  for (const auto& r : records) {
    out += csv_field(r.algorithm) + "," + std::to_string(r.fold);
    for (double v : r.metrics.values) out += "," + format_double(v);
    out += "," + csv_field(r.metrics.flag_text()) + "\n";
  }
  return out;
}

std::vector<FoldRecord> metrics_from_csv(std::string_view text) {
  const auto records = parse_csv_records(text);
  std::vector<FoldRecord> out;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& cells = records[i];
    if (cells.size() != kMetricCount + 3) fail(ErrorKind::parse, "metrics table: malformed line " + std::to_string(i + 1));
    FoldRecord r;
    r.algorithm = cells[0];
    r.fold = std::stoi(cells[1]);
    for (std::size_t m = 0; m < kMetricCount; ++m) r.metrics.values[m] = parse_double(cells[m + 2]);
    for (const auto& part : split(cells.back(), ';')) {
      const auto colon = part.find(':');
      if (colon == std::string::npos) continue;
      if (const auto m = metric_from_name(part.substr(0, colon)))
        r.metrics.flags[static_cast<std::size_t>(*m)] =
            part.substr(colon + 1) == "infinite" ? MetricFlag::infinite : MetricFlag::undefined;
    }
    out.push_back(std::move(r));
  }
  return out;
}

void aggregate_evaluations(const fs::path& root, const fs::path& eval_dir, const AggregateOptions& o) {
  std::vector<FoldRecord> records;
  for (const auto& alg : o.algorithms)
    for (int f = 1; f <= o.folds; ++f) {
      const auto j = json::parse(read_artifact(root, layout::fold_eval(eval_dir, alg, f)));
      FoldRecord r;
      r.algorithm = alg;
      r.fold = f;
      for (std::size_t m = 0; m < kMetricCount; ++m) {
        const auto name = std::string(metric_names()[m]);
        r.metrics.values[m] = j.at("metrics").at(name).get<double>();
        if (j.at("flags").contains(name))
          r.metrics.flags[m] = j["flags"][name] == "infinite" ? MetricFlag::infinite : MetricFlag::undefined;
      }
      records.push_back(std::move(r));
    }
  write_artifact(root, layout::metrics(eval_dir), metrics_to_csv(records));
  write_artifact(root, layout::aggregate(eval_dir), to_csv(aggregate(records)));
  const auto findings = significance_workflow(o.algorithms, group_values(records, o.algorithms), o.alpha);
  write_artifact(root, layout::kruskal(eval_dir), kruskal_to_csv(findings));
  write_artifact(root, layout::pairwise(eval_dir), pairwise_to_csv(findings));
  if (o.features.empty()) return;

  // Per algorithm: fold-mean importance (features a fold dropped count 0).
  std::string long_table = "algorithm,fold,feature,score\n";
  std::vector<std::vector<double>> per_algorithm;
  std::vector<double> weights;
  for (const auto& alg : o.algorithms) {
    std::vector<double> sum(o.features.size(), 0.0);
    for (int f = 1; f <= o.folds; ++f) {
      const auto rows = parse_csv_records(read_artifact(root, layout::importance(eval_dir, alg, f)));
      std::map<std::string, double> score;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& cells = rows[i];
        const bool builtin = o.importance == ImportanceSource::builtin && !cells[2].empty();
        score[cells[0]] = parse_double(builtin ? cells[2] : cells[1]);
      }
      for (std::size_t k = 0; k < o.features.size(); ++k) {
        const auto it = score.find(o.features[k]);
        const double v = it == score.end() ? 0.0 : it->second;
        sum[k] += v;
        long_table += csv_field(alg) + "," + std::to_string(f) + "," + csv_field(o.features[k]) + "," + format_double(v) + "\n";
      }
    }
    for (double& v : sum) v /= o.folds;
    per_algorithm.push_back(sum);
    weights.push_back(median(fold_values(records, alg, o.cfibp_weight)));
  }
  write_artifact(root, layout::feature_importance(eval_dir), long_table);

  const auto total = composite_importance(per_algorithm, weights);
  std::vector<std::vector<double>> parts;
  for (std::size_t a = 0; a < o.algorithms.size(); ++a)
    parts.push_back(composite_importance({per_algorithm[a]}, {weights[a]}));
  std::string comp = "feature";
  for (const auto& alg : o.algorithms) comp += "," + csv_field(alg);
  comp += ",composite\n";
  for (std::size_t k = 0; k < o.features.size(); ++k) {
    comp += csv_field(o.features[k]);
    for (const auto& p : parts) comp += "," + format_double(p[k]);
    comp += "," + format_double(total[k]) + "\n";
  }
  write_artifact(root, layout::composite(eval_dir), comp);
}

void aggregation(const PipelineConfig& c, const fs::path& root, const std::string& ds) {
  AggregateOptions o;
  o.algorithms = c.algorithms;
  o.folds = c.cv_folds;
  o.alpha = c.alpha;
  o.cfibp_weight = c.cfibp_weight;
  o.importance = c.importance;
  o.features = load_recipe(root, ds, 1).feature_order;
  aggregate_evaluations(root, layout::evaluation(ds), o);
}

}  // namespace tabml::stages
