#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

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

constexpr int kArtifactVersion = 1;

std::string checksum(const fs::path& file) { return hex64(fnv1a64(read_file(file))); }

/// Settings that change results; output_dir and max_jobs do not.
std::string config_fingerprint(const PipelineConfig& c) {
  std::string text = "artifact_version=" + std::to_string(kArtifactVersion) + "\n";
  for (const auto& [k, v] : effective_settings(c))
    if (k != "output_dir" && k != "max_jobs") text += k + "=" + v + "\n";
  return hex64(fnv1a64(text));
}

fs::path stamp_path(const Job& j) { return layout::state() / (j.id + ".json"); }

std::string key(const fs::path& p) { return p.generic_string(); }

void execute(const PhasePlan& plan, const fs::path& root, const Job& j) {
  const auto& c = plan.config;
  switch (static_cast<Phase>(j.phase)) {
    case Phase::eda: {
      const auto it = std::find(plan.datasets.begin(), plan.datasets.end(), j.dataset);
      stages::eda(c, root, j.dataset, plan.dataset_files[static_cast<std::size_t>(it - plan.datasets.begin())]);
      break;
    }
    case Phase::partition: stages::partition(c, root, j.dataset); break;
    case Phase::transform: stages::transform(c, root, j.dataset, j.fold); break;
    case Phase::importance: stages::importance(c, root, j.dataset, j.fold); break;
    case Phase::selection: stages::selection(c, root, j.dataset, j.fold); break;
    case Phase::training: stages::training(c, root, j.dataset, j.algorithm, j.fold); break;
    case Phase::evaluation: stages::evaluation(c, root, j.dataset, j.algorithm, j.fold); break;
    case Phase::aggregation: stages::aggregation(c, root, j.dataset); break;
    case Phase::figures: {
      report::EvaluationFigures figs{c.algorithms, c.cv_folds, c.top_features, true};
      report::render_evaluation_figures(root, layout::evaluation(j.dataset), layout::figures(j.dataset), j.dataset, figs);
      report::render_selection_figures(root, j.dataset, c.cv_folds, c.top_features);
      break;
    }
    case Phase::comparison: report::render_comparison(root, c, plan.datasets); break;
    case Phase::report: {
      const auto doc = report::experiment_report(root, c, plan.datasets);
      stages::write_artifact(root, layout::summary_md(), report::to_markdown(doc));
      stages::write_artifact(root, layout::summary_html(), report::to_html(doc));
      break;
    }
  }
}

struct JobRecord {
  std::string status = "not_run";
  double seconds = 0.0;
};

}  // namespace

RunResult run(const PhasePlan& plan, const RunOptions& options) {
  const auto& c = plan.config;
  const fs::path root = plan.experiment_dir;
  if (options.only_phase < 0 || options.only_phase > kPhaseCount)
    fail(ErrorKind::invalid_argument, "phase must be between 1 and " + std::to_string(kPhaseCount));
  const int workers_cap = options.max_jobs > 0 ? options.max_jobs : std::max(1, c.max_jobs);
  fs::create_directories(root / layout::state());
  drain_warnings();

  const std::string fingerprint = config_fingerprint(c);
  RunResult result;
  result.experiment_dir = root;
  std::set<std::string> dirty;
  std::map<std::string, JobRecord> records;
  std::vector<std::string> warnings;
  json phase_stats = json::array();
  bool halted = false;

  for (int phase = 1; phase <= kPhaseCount && !halted; ++phase) {
    if (options.only_phase && phase != options.only_phase) continue;
    const auto& jobs = plan.phases[static_cast<std::size_t>(phase - 1)];
    if (jobs.empty()) continue;
    const auto phase_start = std::chrono::steady_clock::now();

    std::vector<const Job*> todo;
    std::size_t skipped = 0;
    for (const auto& j : jobs) {
      auto& rec = records[j.id];
      bool fresh = !options.only_phase;
      json stamp;
      if (fresh && fs::exists(root / stamp_path(j))) {
        try {
          stamp = json::parse(read_file(root / stamp_path(j)));
        } catch (const std::exception&) {
          fresh = false;
        }
      } else {
        fresh = false;
      }
      if (fresh) fresh = stamp.value("config", "") == fingerprint;
      for (std::size_t i = 0; fresh && i < j.inputs.size(); ++i) {
        const auto k = key(j.inputs[i]);
        fresh = !dirty.count(k) && fs::exists(root / j.inputs[i]) && stamp["inputs"].value(k, "") == checksum(root / j.inputs[i]);
      }
      for (std::size_t i = 0; fresh && i < j.outputs.size(); ++i) {
        const auto k = key(j.outputs[i]);
        fresh = fs::exists(root / j.outputs[i]) && stamp["outputs"].value(k, "") == checksum(root / j.outputs[i]);
      }
      if (fresh) {
        rec.status = "skipped";
        rec.seconds = stamp.value("seconds", 0.0);
        ++skipped;
      } else {
        todo.push_back(&j);
      }
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mu;
    std::vector<std::pair<std::size_t, JobFailure>> failures;
    std::vector<std::pair<std::size_t, double>> done;
    auto worker = [&] {
      for (;;) {
        if (stop) return;
        const std::size_t i = next++;
        if (i >= todo.size()) return;
        const Job& j = *todo[i];
        const auto t0 = std::chrono::steady_clock::now();
        try {
          json stamp;
          stamp["id"] = j.id;
          stamp["config"] = fingerprint;
          stamp["inputs"] = json::object();
          for (const auto& in : j.inputs) {
            if (!fs::exists(root / in)) fail(ErrorKind::io, "missing input " + key(in));
            stamp["inputs"][key(in)] = checksum(root / in);
          }
          execute(plan, root, j);
          stamp["outputs"] = json::object();
          for (const auto& out : j.outputs) {
            if (!fs::exists(root / out)) fail(ErrorKind::internal, "job did not write " + key(out));
            stamp["outputs"][key(out)] = checksum(root / out);
          }
          const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          stamp["seconds"] = secs;
          write_file_atomic(root / stamp_path(j), stamp.dump(1) + "\n");
          std::lock_guard lock(mu);
          done.emplace_back(i, secs);
        } catch (const std::exception& e) {
          std::error_code ec;
          fs::remove(root / stamp_path(j), ec);
          const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          std::lock_guard lock(mu);
          failures.push_back({i, {j.id, e.what()}});
          done.emplace_back(i, -secs - 1.0);
          stop = true;
        }
      }
    };
    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(workers_cap), todo.size());
    if (n_workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    std::sort(done.begin(), done.end());
    std::size_t executed = 0;
    for (const auto& [i, secs] : done) {
      const Job& j = *todo[i];
      auto& rec = records[j.id];
      if (secs >= 0) {
        rec.status = "executed";
        rec.seconds = secs;
        ++executed;
        result.executed_jobs.push_back(j.id);
        for (const auto& out : j.outputs) dirty.insert(key(out));
      } else {
        rec.status = "failed";
        rec.seconds = -secs - 1.0;
      }
    }
    std::sort(failures.begin(), failures.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& f : failures) result.failures.push_back(std::move(f.second));
    result.executed += executed;
    result.skipped += skipped;
    for (auto& w : drain_warnings()) warnings.push_back(std::move(w));

    const double phase_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - phase_start).count();
    phase_stats.push_back({{"phase", phase},
                           {"name", phase_name(phase)},
                           {"jobs", jobs.size()},
                           {"executed", executed},
                           {"skipped", skipped},
                           {"failed", failures.size()},
                           {"seconds", phase_secs}});
    halted = !failures.empty();
  }

  json m;
  m["artifact_version"] = kArtifactVersion;
  m["experiment"] = c.experiment_name;
  m["seed"] = c.seed ? *c.seed : 0;
  m["config_snapshot"] = c.source_text;
  m["overrides"] = json::array();
  for (const auto& [k, v] : c.overrides) m["overrides"].push_back({{"key", k}, {"value", v}});
  m["effective_config"] = json::object();
  for (const auto& [k, v] : effective_settings(c)) m["effective_config"][k] = v;
  m["datasets"] = json::array();
  for (std::size_t d = 0; d < plan.datasets.size(); ++d)
    m["datasets"].push_back({{"name", plan.datasets[d]}, {"file", plan.dataset_files[d].string()}});
  m["phases"] = phase_stats;
  m["jobs"] = json::array();
  m["artifacts"] = json::array();
  std::string runtimes = "phase,job,status,seconds\n";
  for (const auto& jobs : plan.phases) {
    for (const auto& j : jobs) {
      const auto it = records.find(j.id);
      const JobRecord rec = it == records.end() ? JobRecord{} : it->second;
      m["jobs"].push_back({{"id", j.id}, {"phase", phase_name(j.phase)}, {"status", rec.status}, {"seconds", rec.seconds}});
      runtimes += std::string(phase_name(j.phase)) + "," + csv_field(j.id) + "," + rec.status + "," +
                  format_double(rec.seconds) + "\n";
      for (const auto& out : j.outputs)
        if (fs::exists(root / out)) m["artifacts"].push_back({{"path", key(out)}, {"checksum", checksum(root / out)}});
    }
  }
  m["failures"] = json::array();
  for (const auto& f : result.failures) m["failures"].push_back({{"job", f.job_id}, {"message", f.message}});
  m["warnings"] = warnings;
  m["status"] = result.ok() ? "ok" : "failed";
  write_file_atomic(root / layout::manifest(), m.dump(1) + "\n");
  write_file_atomic(root / layout::runtimes(), runtimes);
  write_file_atomic(root / layout::config_snapshot(), c.source_text);
  return result;
}

}  // namespace tabml
