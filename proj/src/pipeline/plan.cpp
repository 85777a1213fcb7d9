#include <algorithm>

#include "pipeline/layout.hpp"
#include "report/builders.hpp"
#include "tabml/common.hpp"
#include "tabml/pipeline.hpp"

namespace tabml {

namespace fs = std::filesystem;

const char* phase_name(int phase) {
  static const char* names[] = {"eda",        "partition",  "transform",   "importance", "selection", "training",
                                "evaluation", "aggregation", "figures", "comparison", "report"};
  if (phase < 1 || phase > kPhaseCount) fail(ErrorKind::invalid_argument, "no phase " + std::to_string(phase));
  return names[phase - 1];
}

namespace {

std::string job_id(int phase, const std::string& ds, const std::string& alg, int fold) {
  std::string id = phase_name(phase);
  if (!ds.empty()) id += "." + ds;
  if (!alg.empty()) id += "." + alg;
  if (fold > 0) id += "." + layout::fold_tag(fold);
  return id;
}

Job make_job(int phase, const std::string& ds, const std::string& alg, int fold, std::vector<fs::path> inputs,
             std::vector<fs::path> outputs) {
  Job j;
  j.phase = phase;
  j.dataset = ds;
  j.algorithm = alg;
  j.fold = fold;
  j.id = job_id(phase, ds, alg, fold);
  j.inputs = std::move(inputs);
  j.outputs = std::move(outputs);
  return j;
}

std::vector<fs::path> evaluation_outputs(const fs::path& eval) {
  return {layout::metrics(eval), layout::aggregate(eval), layout::kruskal(eval), layout::pairwise(eval),
          layout::feature_importance(eval), layout::composite(eval)};
}

}  // namespace

PhasePlan plan(const PipelineConfig& config) {
  PhasePlan p;
  p.config = config;
  const auto& c = p.config;
  if (!c.seed) fail(ErrorKind::config, "config: 'seed' is required");
  if (c.algorithms.empty()) fail(ErrorKind::config, "config: no algorithm enabled");
  for (const auto& a : c.algorithms)
    if (!is_registered(a)) fail(ErrorKind::config, "config: unknown algorithm '" + a + "'");
  if (c.data_dir.empty()) fail(ErrorKind::config, "config: 'data_dir' is required");
  if (!fs::is_directory(c.data_dir)) fail(ErrorKind::config, "config: data_dir '" + c.data_dir.string() + "' is not a directory");
  for (const auto& e : fs::directory_iterator(c.data_dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") p.dataset_files.push_back(fs::absolute(e.path()));
  std::sort(p.dataset_files.begin(), p.dataset_files.end());
  if (p.dataset_files.empty()) fail(ErrorKind::config, "config: no .csv files in '" + c.data_dir.string() + "'");
  for (const auto& f : p.dataset_files) p.datasets.push_back(f.stem().string());
  p.experiment_dir = c.experiment_dir();

  const int k = c.cv_folds;
  p.phases.assign(kPhaseCount, {});
  auto add = [&](Job j) { p.phases[static_cast<std::size_t>(j.phase - 1)].push_back(std::move(j)); };

  std::vector<fs::path> report_inputs;
  for (std::size_t d = 0; d < p.datasets.size(); ++d) {
    const auto& ds = p.datasets[d];
    const auto types = layout::feature_types(ds);
    add(make_job(1, ds, "", 0, {p.dataset_files[d]},
                 {layout::cleaned(ds), types, layout::eda_summary(ds), layout::univariate(ds), layout::correlations(ds),
                  layout::class_counts_svg(ds)}));

    std::vector<fs::path> split_out{layout::split(ds)};
    for (int f = 1; f <= k; ++f) {
      split_out.push_back(layout::fold_train(ds, f));
      split_out.push_back(layout::fold_test(ds, f));
    }
    add(make_job(2, ds, "", 0, {layout::cleaned(ds), types}, split_out));

    const auto eval = layout::evaluation(ds);
    std::vector<fs::path> agg_in{layout::recipe(ds, 1)}, fig_in;
    for (int f = 1; f <= k; ++f) {
      const auto train = layout::fold_train(ds, f);
      const auto recipe = layout::recipe(ds, f);
      add(make_job(3, ds, "", f, {train, types}, {recipe}));
      add(make_job(4, ds, "", f, {recipe, train, types}, {layout::scores(ds, f)}));
      add(make_job(5, ds, "", f, {layout::scores(ds, f)}, {layout::selected(ds, f)}));
      fig_in.push_back(layout::selected(ds, f));
      report_inputs.push_back(layout::selected(ds, f));
    }
    for (const auto& a : c.algorithms) {
      for (int f = 1; f <= k; ++f) {
        const auto recipe = layout::recipe(ds, f);
        add(make_job(6, ds, a, f, {layout::selected(ds, f), recipe, layout::fold_train(ds, f), types},
                     {layout::model(ds, a, f), layout::trials(ds, a, f), layout::structure(ds, a, f)}));
        const std::vector<fs::path> outs{layout::fold_eval(eval, a, f), layout::predictions(eval, a, f),
                                         layout::curve(eval, a, f, CurveKind::roc),
                                         layout::curve(eval, a, f, CurveKind::prc), layout::importance(eval, a, f)};
        add(make_job(7, ds, a, f, {layout::model(ds, a, f), recipe, layout::fold_test(ds, f), types}, outs));
        agg_in.push_back(outs[0]);
        agg_in.push_back(outs[4]);
        fig_in.push_back(outs[0]);
        fig_in.push_back(outs[2]);
        fig_in.push_back(outs[3]);
      }
    }
    const auto agg_out = evaluation_outputs(eval);
    add(make_job(8, ds, "", 0, agg_in, agg_out));
    fig_in.insert(fig_in.end(), agg_out.begin(), agg_out.end());

    report::EvaluationFigures figs{c.algorithms, k, c.top_features, true};
    auto fig_out = report::evaluation_figure_paths(layout::figures(ds), figs);
    for (const auto& s : report::selection_figure_paths(ds)) fig_out.push_back(s);
    add(make_job(9, ds, "", 0, fig_in, fig_out));

    report_inputs.push_back(layout::eda_summary(ds));
    report_inputs.insert(report_inputs.end(), agg_out.begin(), agg_out.end());
    report_inputs.insert(report_inputs.end(), fig_out.begin(), fig_out.end());
  }

  if (p.datasets.size() > 1) {
    std::vector<fs::path> in;
    for (const auto& ds : p.datasets) in.push_back(layout::metrics(layout::evaluation(ds)));
    const auto out = report::comparison_outputs(c);
    add(make_job(10, "", "", 0, in, out));
    report_inputs.insert(report_inputs.end(), out.begin(), out.end());
  }
  add(make_job(11, "", "", 0, report_inputs, {layout::summary_md(), layout::summary_html()}));
  return p;
}

}  // namespace tabml
