#include "tabml/tabml.h"

#include <exception>
#include <string>

#include "pipeline/stages.hpp"
#include "tabml/apply.hpp"
#include "tabml/common.hpp"
#include "tabml/log.hpp"
#include "tabml/pipeline.hpp"
#include "tabml/simdata.hpp"

struct tabml_config {
  tabml::PipelineConfig config;
  std::string experiment_dir;
};

namespace {

thread_local std::string g_last_error;

tabml_status to_status(tabml::ErrorKind kind) {
  switch (kind) {
    case tabml::ErrorKind::invalid_argument: return TABML_ERR_INVALID_ARGUMENT;
    case tabml::ErrorKind::parse: return TABML_ERR_PARSE;
    case tabml::ErrorKind::config: return TABML_ERR_CONFIG;
    case tabml::ErrorKind::io: return TABML_ERR_IO;
    case tabml::ErrorKind::job_failed: return TABML_ERR_JOB_FAILED;
    case tabml::ErrorKind::internal: return TABML_ERR_INTERNAL;
  }
  return TABML_ERR_INTERNAL;
}

template <class F>
tabml_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const tabml::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TABML_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TABML_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) tabml::fail(tabml::ErrorKind::invalid_argument, std::string(what) + " must not be null");
}

void write_simulation(const tabml::Dataset& d, const nlohmann::json& meta, const char* out_csv) {
  const std::filesystem::path out(out_csv);
  tabml::write_csv(d, tabml::DatasetConfig{}, out);
  auto sidecar = out;
  sidecar.replace_extension(".meta.json");
  tabml::write_file_atomic(sidecar, meta.dump(1) + "\n");
}

}  // namespace

extern "C" {

const char* tabml_version(void) { return "1.0.0"; }

const char* tabml_last_error(void) { return g_last_error.c_str(); }

void tabml_set_log_level(tabml_log_level level) { tabml::set_log_level(static_cast<tabml::LogLevel>(level)); }

tabml_status tabml_config_load(const char* path, tabml_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new tabml_config{tabml::load_config(path), {}};
    return TABML_OK;
  });
}

tabml_status tabml_config_parse(const char* text, tabml_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new tabml_config{tabml::parse_config(text), {}};
    return TABML_OK;
  });
}

tabml_status tabml_config_set(tabml_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    tabml::set_option(config->config, key, value);
    return TABML_OK;
  });
}

const char* tabml_config_experiment_dir(tabml_config* config) {
  if (!config) return "";
  config->experiment_dir = config->config.experiment_dir().string();
  return config->experiment_dir.c_str();
}

void tabml_config_free(tabml_config* config) { delete config; }

tabml_status tabml_run(const tabml_config* config, int phase, int max_jobs, tabml_run_summary* summary) {
  return guarded([&] {
    need(config, "config");
    const auto plan = tabml::plan(config->config);
    const auto r = tabml::run(plan, tabml::RunOptions{max_jobs, phase});
    if (summary) *summary = {r.executed, r.skipped, r.failures.size()};
    if (r.ok()) return TABML_OK;
    std::string msg;
    for (const auto& f : r.failures) msg += (msg.empty() ? "" : "; ") + f.job_id + ": " + f.message;
    g_last_error = msg;
    return TABML_ERR_JOB_FAILED;
  });
}

tabml_status tabml_apply(const char* experiment_dir, const char* data_csv, const char* dataset, int predictions_only,
                         int max_jobs, size_t* models_applied) {
  return guarded([&] {
    need(experiment_dir, "experiment_dir");
    need(data_csv, "data_csv");
    tabml::ApplyOptions o;
    o.experiment_dir = experiment_dir;
    o.data = data_csv;
    o.dataset = dataset ? dataset : "";
    o.predictions_only = predictions_only != 0;
    o.max_jobs = max_jobs;
    const auto r = tabml::apply_models(o);
    if (models_applied) *models_applied = r.models;
    return TABML_OK;
  });
}

tabml_status tabml_simulate_mux(int total_bits, size_t n_instances, uint64_t seed, const char* out_csv) {
  return guarded([&] {
    need(out_csv, "out_csv");
    const tabml::MuxSpec spec{total_bits, n_instances, seed};
    write_simulation(tabml::gen_mux(spec), tabml::simulation_metadata(spec), out_csv);
    return TABML_OK;
  });
}

tabml_status tabml_simulate_snp(const char* architecture, double heritability, size_t n_features, size_t n_instances,
                                uint64_t seed, const char* out_csv) {
  return guarded([&] {
    need(architecture, "architecture");
    need(out_csv, "out_csv");
    tabml::SnpSpec spec;
    spec.architecture = tabml::snp_architecture_from_string(architecture);
    spec.heritability = heritability;
    spec.n_features = n_features;
    spec.n_instances = n_instances;
    spec.seed = seed;
    write_simulation(tabml::gen_snp(spec), tabml::simulation_metadata(spec), out_csv);
    return TABML_OK;
  });
}

}  // extern "C"
