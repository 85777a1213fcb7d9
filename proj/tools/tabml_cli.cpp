#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "tabml/tabml.h"

namespace {

int exit_code(tabml_status s) {
  switch (s) {
    case TABML_OK: return 0;
    case TABML_ERR_CONFIG:
    case TABML_ERR_PARSE:
    case TABML_ERR_INVALID_ARGUMENT: return 2;
    case TABML_ERR_JOB_FAILED: return 3;
    default: return 1;
  }
}

int report(tabml_status s) {
  if (s != TABML_OK) std::fprintf(stderr, "error: %s\n", tabml_last_error());
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AutoML pipeline for binary classification on tabular data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tabml_version()));
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");
  app.add_flag("-v,--verbose", verbose, "Progress messages");

  auto* run = app.add_subcommand("run", "Run the pipeline phases of an experiment");
  std::string config_path, out_dir;
  int phase = 0, jobs = 0;
  std::vector<std::string> sets;
  run->add_option("--config", config_path, "key = value settings file")->required()->check(CLI::ExistingFile);
  run->add_option("--phase", phase, "Run only this phase (1-11)")->check(CLI::Range(1, 11));
  run->add_option("--jobs", jobs, "Parallel jobs within a phase (overrides max_jobs)")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output root (overrides output_dir)");
  run->add_option("--set", sets, "Override a setting, key=value (repeatable)");

  auto* apply = app.add_subcommand("apply", "Apply an experiment's models to new data");
  std::string exp_dir, data, dataset;
  bool predictions_only = false;
  int apply_jobs = 1;
  apply->add_option("--experiment", exp_dir, "Experiment directory")->required()->check(CLI::ExistingDirectory);
  apply->add_option("--data", data, "Replication CSV")->required()->check(CLI::ExistingFile);
  apply->add_option("--dataset", dataset, "Training dataset whose models to apply");
  apply->add_flag("--predictions-only", predictions_only, "No outcome column: write probabilities only");
  apply->add_option("--jobs", apply_jobs, "Parallel models")->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "Generate a benchmark dataset");
  simulate->require_subcommand(1);
  std::uint64_t seed = 0;
  std::string out_csv;
  std::size_t n = 0;
  auto* mux = simulate->add_subcommand("mux", "Multiplexer problem");
  int bits = 6;
  mux->add_option("--bits", bits, "Total bits: 6, 11, 20, 37, 70 or 135");
  mux->add_option("--n", n, "Instances")->default_val(500);
  mux->add_option("--seed", seed, "Random seed")->required();
  mux->add_option("--out", out_csv, "Output CSV")->required();
  auto* snp = simulate->add_subcommand("snp", "SNP genotype problem");
  snp->set_help_flag("--help", "Print this help message and exit");
  std::string arch = "univariate";
  double h = 0.4;
  std::size_t features = 100;
  snp->add_option("--arch", arch, "univariate, additive4, heterogeneous4, epistasis2, het_epistasis2x2, epistasis3");
  snp->add_option("--h", h, "Heritability");
  snp->add_option("--features", features, "Total features");
  snp->add_option("--n", n, "Instances")->default_val(1600);
  snp->add_option("--seed", seed, "Random seed")->required();
  snp->add_option("--out", out_csv, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  tabml_set_log_level(quiet ? TABML_LOG_QUIET : verbose ? TABML_LOG_INFO : TABML_LOG_WARNING);

  if (*run) {
    tabml_config* config = nullptr;
    tabml_status s = tabml_config_load(config_path.c_str(), &config);
    if (s != TABML_OK) return report(s);
    if (!out_dir.empty()) s = tabml_config_set(config, "output_dir", out_dir.c_str());
    for (const auto& kv : sets) {
      if (s != TABML_OK) break;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
        tabml_config_free(config);
        return 2;
      }
      s = tabml_config_set(config, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    }
    tabml_run_summary summary{};
    if (s == TABML_OK) s = tabml_run(config, phase, jobs, &summary);
    if (s == TABML_OK || s == TABML_ERR_JOB_FAILED)
      std::printf("experiment: %s\njobs executed: %zu, skipped: %zu, failed: %zu\n", tabml_config_experiment_dir(config),
                  summary.executed, summary.skipped, summary.failed);
    tabml_config_free(config);
    return report(s);
  }
  if (*apply) {
    std::size_t models = 0;
    const auto s = tabml_apply(exp_dir.c_str(), data.c_str(), dataset.empty() ? nullptr : dataset.c_str(),
                               predictions_only ? 1 : 0, apply_jobs, &models);
    if (s == TABML_OK) std::printf("applied %zu models\n", models);
    return report(s);
  }
  if (*mux) return report(tabml_simulate_mux(bits, n, seed, out_csv.c_str()));
  return report(tabml_simulate_snp(arch.c_str(), h, features, n, seed, out_csv.c_str()));
}
