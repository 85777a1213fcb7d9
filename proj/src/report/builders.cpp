#include "report/builders.hpp"

#include <algorithm>
#include <map>

#include "pipeline/layout.hpp"
#include "pipeline/stages.hpp"
#include "tabml/evalstats.hpp"

namespace tabml::report {

using nlohmann::json;
using Table = std::vector<std::vector<std::string>>;

const std::vector<Metric>& rate_metrics() {
  static const std::vector<Metric> m{Metric::accuracy,    Metric::balanced_accuracy, Metric::f1,
                                     Metric::sensitivity, Metric::specificity,       Metric::precision,
                                     Metric::roc_auc,     Metric::prc_auc,           Metric::aps,
                                     Metric::npv,         Metric::lr_plus,           Metric::lr_minus};
  return m;
}

namespace {

Table read_table(const fs::path& root, const fs::path& rel) { return parse_csv_records(read_file(root / rel)); }

std::size_t column(const Table& t, const std::string& name) {
  const auto& h = t.front();
  const auto it = std::find(h.begin(), h.end(), name);
  if (it == h.end()) fail(ErrorKind::parse, "table has no column '" + name + "'");
  return static_cast<std::size_t>(it - h.begin());
}

Points read_curve(const fs::path& path) {
  Points p;
  const auto t = parse_csv_records(read_file(path));
  for (std::size_t i = 1; i < t.size(); ++i) p.emplace_back(parse_double(t[i][0]), parse_double(t[i][1]));
  return p;
}

void write(const fs::path& root, const fs::path& rel, const std::string& svg) { stages::write_artifact(root, rel, svg); }

/// Indices of the top n values, descending, ties by name.
std::vector<std::size_t> top_indices(const std::vector<double>& values, const std::vector<std::string>& names,
                                     std::size_t n) {
  auto order = rank_descending(values, names);
  if (order.size() > n) order.resize(n);
  return order;
}

std::string metric_label(Metric m) { return std::string(metric_name(m)); }

bool lower_is_better(Metric m) { return m == Metric::lr_minus; }

/// Aggregate cells by (algorithm, metric name) as printed in the CSV.
struct AggregateCells {
  std::map<std::pair<std::string, std::string>, std::array<std::string, 3>> cells;

  explicit AggregateCells(const Table& t) {
    for (std::size_t i = 1; i < t.size(); ++i) cells[{t[i][0], t[i][1]}] = {t[i][2], t[i][3], t[i][4]};
  }
  const std::string& get(const std::string& alg, Metric m, int which) const {
    return cells.at({alg, metric_label(m)})[static_cast<std::size_t>(which)];
  }
};

void performance_tables(Document& doc, const Table& agg, const std::vector<std::string>& algorithms, int folds) {
  const AggregateCells cells(agg);
  std::vector<std::string> header{"algorithm"};
  for (auto m : rate_metrics()) header.push_back(metric_label(m));
  const char* names[] = {"Mean", "Median", "Standard deviation"};
  for (int which = 0; which < 3; ++which) {
    doc.paragraph(std::string(names[which]) + " over " + std::to_string(folds) + " test folds.");
    Table rows;
    for (const auto& a : algorithms) {
      std::vector<std::string> row{a};
      for (auto m : rate_metrics()) row.push_back(cells.get(a, m, which));
      rows.push_back(row);
    }
    doc.table(header, rows);
  }
}

void significance_tables(Document& doc, const Table& agg, const Table& kw, const Table& pw,
                         const std::vector<std::string>& algorithms, double alpha) {
  const AggregateCells cells(agg);
  std::size_t significant = 0;
  for (std::size_t i = 1; i < kw.size(); ++i) significant += kw[i][3] == "1";
  doc.paragraph("Kruskal-Wallis tests across algorithms per metric (alpha = " + format_double(alpha) + ", " +
                std::to_string(kw.size() - 1) + " tests, raw p-values without multiple-comparison correction). " +
                std::to_string(significant) + " metric(s) significant; pairwise Mann-Whitney U and Wilcoxon " +
                "signed-rank tests are run only for those (" + std::to_string(pw.size() - 1) + " pairs in total).");
  Table kw_rows;
  for (std::size_t i = 1; i < kw.size(); ++i) kw_rows.push_back({kw[i][0], kw[i][1], kw[i][2], kw[i][3], kw[i][4]});
  doc.table({"metric", "H", "p_value", "significant", "degenerate"}, kw_rows);

  Table best_rows, pair_rows;
  for (auto m : rate_metrics()) {
    std::string best;
    double best_value = 0;
    for (const auto& a : algorithms) {
      const double v = parse_double(cells.get(a, m, 0));
      if (best.empty() || (lower_is_better(m) ? v < best_value : v > best_value)) best = a, best_value = v;
    }
    best_rows.push_back({metric_label(m), best, cells.get(best, m, 0)});
    for (std::size_t i = 1; i < pw.size(); ++i)
      if (pw[i][0] == metric_label(m) && (pw[i][1] == best || pw[i][2] == best)) pair_rows.push_back(pw[i]);
  }
  doc.paragraph("Best algorithm per metric by mean (lowest for lr_minus).");
  doc.table({"metric", "best algorithm", "mean"}, best_rows);
  if (!pair_rows.empty()) {
    doc.paragraph("Pairwise tests involving the best algorithm, for metrics with a significant Kruskal-Wallis test.");
    doc.table({"metric", "a", "b", "mwu_u", "mwu_p", "wilcoxon_w", "wilcoxon_p", "wilcoxon_degenerate"}, pair_rows);
  }
}

std::string rel_string(const fs::path& p) { return p.generic_string(); }

}  // namespace

std::vector<fs::path> evaluation_figure_paths(const fs::path& fig_dir, const EvaluationFigures& o) {
  std::vector<fs::path> out;
  for (const auto& a : o.algorithms) {
    out.push_back(fig_dir / ("roc_" + a + ".svg"));
    out.push_back(fig_dir / ("prc_" + a + ".svg"));
  }
  out.push_back(fig_dir / "roc_all.svg");
  out.push_back(fig_dir / "prc_all.svg");
  for (auto m : rate_metrics()) out.push_back(fig_dir / ("box_" + metric_label(m) + ".svg"));
  if (o.importance) {
    for (const auto& a : o.algorithms) out.push_back(fig_dir / ("importance_" + a + ".svg"));
    out.push_back(fig_dir / "cfibp.svg");
  }
  return out;
}

void render_evaluation_figures(const fs::path& root, const fs::path& eval_dir, const fs::path& fig_dir,
                               const std::string& title, const EvaluationFigures& o) {
  double positives = 0, instances = 0;
  for (int f = 1; f <= o.folds; ++f) {
    const auto j = json::parse(read_file(root / layout::fold_eval(eval_dir, o.algorithms.front(), f)));
    positives += j.at("positives").get<double>();
    instances += j.at("instances").get<double>();
  }
  const double prevalence = instances > 0 ? positives / instances : 0.0;

  std::vector<LineSeries> roc_all, prc_all;
  for (const auto& a : o.algorithms) {
    for (auto kind : {CurveKind::roc, CurveKind::prc}) {
      std::vector<Points> curves;
      std::vector<LineSeries> series;
      for (int f = 1; f <= o.folds; ++f) {
        curves.push_back(read_curve(root / layout::curve(eval_dir, a, f, kind)));
        LineSeries s;
        s.points = curves.back();
        s.faint = true;
        series.push_back(s);
      }
      LineSeries mean{"mean of " + std::to_string(o.folds) + " folds", mean_curve(curves), true};
      LineSeries no_skill;
      no_skill.label = "no skill";
      no_skill.dashed = true;
      no_skill.points = kind == CurveKind::roc ? Points{{0, 0}, {1, 1}} : Points{{0, prevalence}, {1, prevalence}};
      series.push_back(mean);
      series.push_back(no_skill);
      (kind == CurveKind::roc ? roc_all : prc_all).push_back({a, mean.points, false});
      const bool roc = kind == CurveKind::roc;
      write(root, fig_dir / ((roc ? "roc_" : "prc_") + a + ".svg"),
            line_chart(title + ": " + a + (roc ? " ROC" : " PRC"), roc ? "false positive rate" : "recall",
                       roc ? "true positive rate" : "precision", series));
    }
  }
  LineSeries diag;
  diag.label = "no skill";
  diag.dashed = true;
  diag.points = {{0, 0}, {1, 1}};
  roc_all.push_back(diag);
  diag.points = {{0, prevalence}, {1, prevalence}};
  prc_all.push_back(diag);
  write(root, fig_dir / "roc_all.svg", line_chart(title + ": mean ROC", "false positive rate", "true positive rate", roc_all));
  write(root, fig_dir / "prc_all.svg", line_chart(title + ": mean PRC", "recall", "precision", prc_all));

  const auto records = stages::metrics_from_csv(read_file(root / layout::metrics(eval_dir)));
  for (auto m : rate_metrics()) {
    std::vector<BoxGroup> groups;
    for (const auto& a : o.algorithms) groups.push_back({a, fold_values(records, a, m)});
    write(root, fig_dir / ("box_" + metric_label(m) + ".svg"), box_plot(title + ": " + metric_label(m), metric_label(m), groups));
  }
  if (!o.importance) return;

  const auto imp = read_table(root, layout::feature_importance(eval_dir));
  for (const auto& a : o.algorithms) {
    std::vector<std::string> names;
    std::map<std::string, std::vector<double>> values;
    for (std::size_t i = 1; i < imp.size(); ++i) {
      if (imp[i][0] != a) continue;
      if (!values.count(imp[i][2])) names.push_back(imp[i][2]);
      values[imp[i][2]].push_back(parse_double(imp[i][3]));
    }
    std::vector<double> medians;
    for (const auto& n : names) medians.push_back(median(values[n]));
    std::vector<BoxGroup> groups;
    for (auto k : top_indices(medians, names, o.top_features)) groups.push_back({names[k], values[names[k]]});
    write(root, fig_dir / ("importance_" + a + ".svg"),
          box_plot(title + ": " + a + " feature importance (top " + std::to_string(groups.size()) + ")", "importance",
                   groups));
  }

  const auto comp = read_table(root, layout::composite(eval_dir));
  std::vector<std::string> features;
  std::vector<double> totals;
  const std::size_t total_col = column(comp, "composite");
  for (std::size_t i = 1; i < comp.size(); ++i) {
    features.push_back(comp[i][0]);
    totals.push_back(parse_double(comp[i][total_col]));
  }
  const auto top = top_indices(totals, features, o.top_features);
  std::vector<std::string> categories;
  for (auto k : top) categories.push_back(features[k]);
  std::vector<Stack> stacks;
  for (const auto& a : o.algorithms) {
    const std::size_t col = column(comp, a);
    Stack s{a, {}};
    for (auto k : top) s.values.push_back(parse_double(comp[k + 1][col]));
    stacks.push_back(s);
  }
  write(root, fig_dir / "cfibp.svg",
        stacked_bar_chart(title + ": composite feature importance", "weighted normalized importance", categories, stacks));
}

std::vector<fs::path> selection_figure_paths(const std::string& ds) {
  return {layout::figures(ds) / "fs_mi.svg", layout::figures(ds) / "fs_multisurf.svg"};
}

void render_selection_figures(const fs::path& root, const std::string& ds, int folds, std::size_t top_features) {
  std::vector<std::string> names;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> values;
  for (int f = 1; f <= folds; ++f) {
    const auto s = feature_scores_from_csv(read_file(root / layout::selected(ds, f)), f);
    for (std::size_t j = 0; j < s.features.size(); ++j) {
      if (!values.count(s.features[j])) names.push_back(s.features[j]);
      values[s.features[j]].first.push_back(s.mi_scores[j]);
      values[s.features[j]].second.push_back(s.multisurf_scores[j]);
    }
  }
  for (int which = 0; which < 2; ++which) {
    std::vector<double> med;
    for (const auto& n : names) med.push_back(median(which == 0 ? values[n].first : values[n].second));
    std::vector<std::string> labels;
    std::vector<double> shown;
    for (auto k : top_indices(med, names, top_features)) labels.push_back(names[k]), shown.push_back(med[k]);
    const std::string scorer = which == 0 ? "mutual information" : "MultiSURF";
    write(root, selection_figure_paths(ds)[static_cast<std::size_t>(which)],
          bar_chart(ds + ": median " + scorer + " score over folds", scorer, labels, shown));
  }
}

std::vector<fs::path> comparison_outputs(const PipelineConfig&) {
  std::vector<fs::path> out;
  const auto dir = layout::comparison();
  for (const auto* name :
       {"datasets_kruskal.csv", "datasets_pairwise.csv", "best_algorithms.csv", "best_kruskal.csv", "best_pairwise.csv"})
    out.push_back(dir / name);
  for (auto m : rate_metrics()) out.push_back(dir / ("box_" + metric_label(m) + ".svg"));
  return out;
}

void render_comparison(const fs::path& root, const PipelineConfig& config, const std::vector<std::string>& datasets) {
  std::vector<std::vector<FoldRecord>> records;
  for (const auto& ds : datasets)
    records.push_back(stages::metrics_from_csv(read_file(root / layout::metrics(layout::evaluation(ds)))));

  std::string kw = "algorithm,metric,statistic,p_value,significant,degenerate\n";
  std::string pw = "algorithm,metric,a,b,mwu_u,mwu_p,wilcoxon_w,wilcoxon_p,wilcoxon_degenerate\n";
  auto prefixed = [](const std::string& csv, const std::string& prefix) {
    std::string out;
    const auto lines = split(csv, '\n');
    for (std::size_t i = 1; i < lines.size(); ++i)
      if (!lines[i].empty()) out += csv_field(prefix) + "," + lines[i] + "\n";
    return out;
  };
  for (const auto& a : config.algorithms) {
    std::vector<std::array<std::vector<double>, kMetricCount>> values;
    for (const auto& r : records) values.push_back(group_values(r, {a}).front());
    const auto findings = significance_workflow(datasets, values, config.alpha);
    kw += prefixed(kruskal_to_csv(findings), a);
    pw += prefixed(pairwise_to_csv(findings), a);
  }
  stages::write_artifact(root, layout::comparison() / "datasets_kruskal.csv", kw);
  stages::write_artifact(root, layout::comparison() / "datasets_pairwise.csv", pw);

  std::string best = "dataset,algorithm," + metric_label(config.primary_metric) + "_mean\n";
  std::vector<std::string> labels;
  std::vector<std::array<std::vector<double>, kMetricCount>> best_values;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto table = aggregate(records[d]);
    std::string winner;
    double top = 0;
    for (const auto& a : config.algorithms) {
      const double v = table.at(a, config.primary_metric).mean;
      if (winner.empty() || (lower_is_better(config.primary_metric) ? v < top : v > top)) winner = a, top = v;
    }
    best += csv_field(datasets[d]) + "," + winner + "," + format_double(top) + "\n";
    labels.push_back(datasets[d] + ":" + winner);
    best_values.push_back(group_values(records[d], {winner}).front());
  }
  const auto best_findings = significance_workflow(labels, best_values, config.alpha);
  stages::write_artifact(root, layout::comparison() / "best_algorithms.csv", best);
  stages::write_artifact(root, layout::comparison() / "best_kruskal.csv", kruskal_to_csv(best_findings));
  stages::write_artifact(root, layout::comparison() / "best_pairwise.csv", pairwise_to_csv(best_findings));

  for (auto m : rate_metrics()) {
    std::vector<BoxGroup> groups;
    std::vector<LineSeries> trends;
    for (const auto& a : config.algorithms) trends.push_back({a, {}, false});
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      const auto table = aggregate(records[d]);
      BoxGroup g{datasets[d], {}};
      for (std::size_t k = 0; k < config.algorithms.size(); ++k) {
        const double v = table.at(config.algorithms[k], m).mean;
        g.values.push_back(v);
        trends[k].points.emplace_back(static_cast<double>(d), v);
      }
      groups.push_back(g);
    }
    write(root, layout::comparison() / ("box_" + metric_label(m) + ".svg"),
          box_plot("Mean " + metric_label(m) + " per algorithm across datasets", metric_label(m), groups, trends));
  }
}

Document experiment_report(const fs::path& root, const PipelineConfig& config, const std::vector<std::string>& datasets) {
  Document doc;
  doc.title = "Experiment summary: " + config.experiment_name;
  const int k = config.cv_folds;

  doc.heading(2, "Settings");
  Table settings;
  for (const auto& [key, value] : effective_settings(config))
    if (key != "output_dir" && key != "max_jobs") settings.push_back({key, value});
  doc.table({"setting", "value"}, settings);

  doc.heading(2, "Datasets");
  Table overview;
  const std::vector<std::string> stats{"instances", "features", "categorical_features", "quantitative_features",
                                       "missing_cells", "class_0", "class_1"};
  for (const auto& ds : datasets) {
    const auto t = read_table(root, layout::eda_summary(ds));
    std::map<std::string, std::string> v;
    for (std::size_t i = 1; i < t.size(); ++i) v[t[i][0]] = t[i][1];
    std::vector<std::string> row{ds};
    for (const auto& s : stats) row.push_back(v[s]);
    overview.push_back(row);
  }
  std::vector<std::string> header{"dataset"};
  header.insert(header.end(), stats.begin(), stats.end());
  doc.table(header, overview);

  for (const auto& ds : datasets) {
    doc.heading(2, "Dataset: " + ds);
    std::vector<std::string> empty_folds;
    Table selection_rows;
    for (int f = 1; f <= k; ++f) {
      const auto t = read_table(root, layout::selected(ds, f));
      std::size_t chosen = 0;
      for (std::size_t i = 1; i < t.size(); ++i) chosen += t[i][3] == "1";
      if (chosen == 0) empty_folds.push_back(std::to_string(f));
      selection_rows.push_back({std::to_string(f), std::to_string(chosen), std::to_string(t.size() - 1)});
    }
    if (!empty_folds.empty())
      doc.banner("feature selection kept no feature in fold(s) " + join(empty_folds, ", ") +
                 "; models of those folds were trained on every feature.");

    doc.heading(3, "Exploratory analysis");
    const auto summary = read_table(root, layout::eda_summary(ds));
    doc.table(summary.front(), Table(summary.begin() + 1, summary.end()));
    doc.image(rel_string(layout::class_counts_svg(ds)), "class counts");

    doc.heading(3, "Feature selection");
    doc.paragraph(std::string("Collective selection over mutual information and ") +
                  (config.turf ? "TuRF-wrapped MultiSURF" : "MultiSURF") + " per training fold" +
                  (config.fs_max_features ? ", capped at " + std::to_string(*config.fs_max_features) + " features." : "."));
    doc.table({"fold", "selected", "features"}, selection_rows);
    for (const auto& p : selection_figure_paths(ds)) doc.image(rel_string(p), p.stem().string());

    const auto eval = layout::evaluation(ds);
    const auto agg = read_table(root, layout::aggregate(eval));
    doc.heading(3, "Performance");
    performance_tables(doc, agg, config.algorithms, k);

    doc.heading(3, "Figures");
    EvaluationFigures figs{config.algorithms, k, config.top_features, true};
    for (const auto& p : evaluation_figure_paths(layout::figures(ds), figs)) doc.image(rel_string(p), p.stem().string());

    doc.heading(3, "Statistical comparison");
    significance_tables(doc, agg, read_table(root, layout::kruskal(eval)), read_table(root, layout::pairwise(eval)),
                        config.algorithms, config.alpha);
  }

  if (datasets.size() > 1) {
    doc.heading(2, "Cross-dataset comparison");
    const auto best = read_table(root, layout::comparison() / "best_algorithms.csv");
    doc.paragraph("Best algorithm per dataset by mean " + metric_label(config.primary_metric) + ".");
    doc.table(best.front(), Table(best.begin() + 1, best.end()));
    const auto bk = read_table(root, layout::comparison() / "best_kruskal.csv");
    doc.paragraph("Kruskal-Wallis tests among the best algorithms of each dataset.");
    doc.table(bk.front(), Table(bk.begin() + 1, bk.end()));
    const auto bp = read_table(root, layout::comparison() / "best_pairwise.csv");
    if (bp.size() > 1) doc.table(bp.front(), Table(bp.begin() + 1, bp.end()));
    const auto dk = read_table(root, layout::comparison() / "datasets_kruskal.csv");
    Table significant;
    for (std::size_t i = 1; i < dk.size(); ++i)
      if (dk[i][4] == "1") significant.push_back(dk[i]);
    doc.paragraph("Per-algorithm Kruskal-Wallis tests across datasets: " + std::to_string(dk.size() - 1) +
                  " tests, " + std::to_string(significant.size()) + " significant (full table in comparison/datasets_kruskal.csv).");
    if (!significant.empty()) doc.table(dk.front(), significant);
    for (auto m : rate_metrics()) {
      const auto p = layout::comparison() / ("box_" + metric_label(m) + ".svg");
      doc.image(rel_string(p), p.stem().string());
    }
  }

  doc.heading(2, "Runtimes");
  doc.paragraph("Per-phase and per-job runtimes are recorded in runtimes.csv and manifest.json. They are kept out of "
                "this summary so that repeated runs with the same seed produce an identical document.");
  return doc;
}

Document apply_report(const fs::path& root, const ApplyReportInputs& in) {
  Document doc;
  doc.title = "Replication summary: " + in.replication;
  doc.heading(2, "Settings");
  doc.table({"setting", "value"}, {{"experiment", in.experiment_name},
                                   {"training dataset", in.training_dataset},
                                   {"replication data", in.replication},
                                   {"models", std::to_string(in.algorithms.size() * static_cast<std::size_t>(in.folds))}});
  doc.paragraph("Every fold model was applied with its own imputation and scaling recipe and feature subset; nothing "
                "was refitted on the replication data.");
  const fs::path eval = "evaluation";
  const auto agg = read_table(root, layout::aggregate(eval));
  doc.heading(2, "Performance");
  performance_tables(doc, agg, in.algorithms, in.folds);
  doc.heading(2, "Figures");
  EvaluationFigures figs{in.algorithms, in.folds, 40, false};
  for (const auto& p : evaluation_figure_paths("figures", figs)) doc.image(rel_string(p), p.stem().string());
  doc.heading(2, "Statistical comparison");
  significance_tables(doc, agg, read_table(root, layout::kruskal(eval)), read_table(root, layout::pairwise(eval)),
                      in.algorithms, in.alpha);
  return doc;
}

}  // namespace tabml::report
