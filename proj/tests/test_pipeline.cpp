#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <json.hpp>
#include <set>

#include "pipeline/layout.hpp"
#include "tabml/common.hpp"
#include "tabml/pipeline.hpp"
#include "tabml/report.hpp"
#include "tabml/simdata.hpp"

using namespace tabml;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tabml_test_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_mux(const fs::path& dir, const std::string& name, std::uint64_t seed, std::size_t n) {
  MuxSpec spec;
  spec.total_bits = 6;
  spec.n_instances = n;
  spec.seed = seed;
  write_csv(gen_mux(spec), DatasetConfig{}, dir / (name + ".csv"));
}

std::string small_config(const fs::path& data, const fs::path& out) {
  return "data_dir = " + data.string() + "\noutput_dir = " + out.string() +
         "\nexperiment_name = mux\n"
         "cv_folds = 3\nalgorithms = NB,LR,DT\nn_trials = 4\nnested_folds = 2\n"
         "permutation_repeats = 2\nseed = 7   # fixed\n";
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::internal;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config("# header\nseed = 3\nalgorithms = \"DT, NB\"  # trailing\ncv_folds=5\nhp.DT.max_depth = 4\n");
  CHECK(c.seed == 3u);
  CHECK(c.cv_folds == 5);
  // Registry order regardless of listing order.
  CHECK(c.algorithms == std::vector<std::string>{"NB", "DT"});
  CHECK(c.fixed_hyperparameters.at("DT").count("max_depth") == 1);
  CHECK(c.n_trials == 200);

  CHECK(kind_of([] { parse_config("no_such_key = 1\n"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_config("seed = 1\nseed = 2\n"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_config("just text\n"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_config("cv_folds = many\n"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_config("algorithms = NB,XYZ\n"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_config("hp.DT.no_such_param = 1\n"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_config("cv_strategy = matched\n"); }) == ErrorKind::config);

  auto d = parse_config("seed = 1\n");
  set_option(d, "cv_folds", "4");
  CHECK(d.cv_folds == 4);
  CHECK(d.overrides.size() == 1);
  CHECK(kind_of([&] { set_option(d, "bogus", "1"); }) == ErrorKind::config);
}

TEST_CASE("plan shape") {
  const auto data = scratch("plan_data");
  const auto out = scratch("plan_out");
  write_mux(data, "a", 1, 60);
  auto c = parse_config("seed = 1\ndata_dir = " + data.string() + "\noutput_dir = " + out.string() + "\n");
  auto p = plan(c);
  REQUIRE(p.phases.size() == static_cast<std::size_t>(kPhaseCount));
  CHECK(p.phases[0].size() == 1);
  CHECK(p.phases[2].size() == 10);
  CHECK(p.phases[5].size() == 90);
  CHECK(p.phases[6].size() == 90);
  CHECK_FALSE(p.has_phase(static_cast<int>(Phase::comparison)));
  CHECK(p.has_phase(static_cast<int>(Phase::report)));

  write_mux(data, "b", 2, 60);
  p = plan(c);
  CHECK(p.datasets == std::vector<std::string>{"a", "b"});
  CHECK(p.phases[5].size() == 180);
  CHECK(p.phases[9].size() == 1);

  set_option(c, "algorithms", "NB,LR");
  p = plan(c);
  for (const auto& phase : p.phases)
    for (const auto& j : phase) CHECK(j.id.find(".DT.") == std::string::npos);
  CHECK(p.phases[5].size() == 40);

  auto no_seed = parse_config("data_dir = " + data.string() + "\n");
  CHECK(kind_of([&] { plan(no_seed); }) == ErrorKind::config);
  const auto empty = scratch("plan_empty");
  auto none = parse_config("seed = 1\ndata_dir = " + empty.string() + "\n");
  CHECK(kind_of([&] { plan(none); }) == ErrorKind::config);
}

TEST_CASE("end-to-end run, parallel determinism, resume and report consistency") {
  const auto data = scratch("e2e_data");
  const auto out1 = scratch("e2e_out1");
  const auto out4 = scratch("e2e_out4");
  write_mux(data, "mux6", 11, 180);

  const auto text1 = small_config(data, out1);
  auto c1 = parse_config(text1);
  const auto p1 = plan(c1);
  const auto r1 = run(p1, RunOptions{1, 0});
  REQUIRE(r1.ok());
  std::size_t total = 0;
  for (const auto& ph : p1.phases) total += ph.size();
  CHECK(r1.executed == total);

  auto c4 = parse_config(small_config(data, out4));
  const auto r4 = run(plan(c4), RunOptions{4, 0});
  REQUIRE(r4.ok());

  const auto root1 = out1 / "mux";
  const auto root4 = out4 / "mux";
  const auto eval = layout::evaluation("mux6");
  CHECK(read_file(root1 / layout::metrics(eval)) == read_file(root4 / layout::metrics(eval)));
  CHECK(read_file(root1 / layout::summary_md()) == read_file(root4 / layout::summary_md()));
  const auto m1 = nlohmann::json::parse(read_file(root1 / layout::manifest()));
  const auto m4 = nlohmann::json::parse(read_file(root4 / layout::manifest()));
  CHECK(m1["artifacts"] == m4["artifacts"]);
  CHECK(m1["config_snapshot"].get<std::string>() == text1);
  CHECK(m1["seed"].get<std::uint64_t>() == 7u);
  CHECK(m1["status"] == "ok");

  {  // rerun skips everything
    const auto again = run(p1, RunOptions{1, 0});
    CHECK(again.ok());
    CHECK(again.executed == 0);
    CHECK(again.skipped == total);
  }

  {  // deleting one model reruns it and its downstream only
    fs::remove(root1 / layout::model("mux6", "DT", 2));
    const auto again = run(p1, RunOptions{1, 0});
    REQUIRE(again.ok());
    CHECK(as_set(again.executed_jobs) == std::set<std::string>{"training.mux6.DT.fold_2", "evaluation.mux6.DT.fold_2",
                                                                "aggregation.mux6", "figures.mux6", "report"});
    CHECK(read_file(root1 / layout::metrics(eval)) == read_file(root4 / layout::metrics(eval)));
  }

  {  // report tables match the aggregate CSV
    const auto tables = report::markdown_tables(read_file(root1 / layout::summary_md()));
    const auto agg = parse_csv_records(read_file(root1 / layout::aggregate(eval)));
    std::map<std::pair<std::string, std::string>, std::string> means;
    for (std::size_t i = 1; i < agg.size(); ++i) means[{agg[i][0], agg[i][1]}] = agg[i][2];
    std::size_t checked = 0;
    for (const auto& t : tables) {
      if (t.empty() || t[0].empty() || t[0][0] != "algorithm" || t.size() != 4) continue;
      // The first performance table holds means.
      for (std::size_t r = 1; r < t.size(); ++r)
        for (std::size_t col = 1; col < t[0].size(); ++col) {
          CHECK(t[r][col] == means.at({t[r][0], t[0][col]}));
          ++checked;
        }
      break;
    }
    CHECK(checked == 3 * 12);
  }

  {  // a phase whose inputs are missing fails and is recorded
    const auto fresh = scratch("e2e_phase");
    auto c = parse_config(small_config(data, fresh));
    const auto r = run(plan(c), RunOptions{1, static_cast<int>(Phase::training)});
    CHECK_FALSE(r.ok());
    const auto m = nlohmann::json::parse(read_file(fresh / "mux" / layout::manifest()));
    CHECK(m["status"] == "failed");
    CHECK(m["failures"].size() == 1);
  }
}

TEST_CASE("figures reflect the artifacts they are drawn from") {
  const auto root = fs::temp_directory_path() / "tabml_test_pipeline_e2e_out1" / "mux";
  REQUIRE(fs::exists(root / layout::manifest()));
  const auto eval = layout::evaluation("mux6");

  // PRC no-skill line at the pooled positive fraction of the test folds.
  double pos = 0, n = 0;
  for (int f = 1; f <= 3; ++f) {
    const auto j = nlohmann::json::parse(read_file(root / layout::fold_eval(eval, "DT", f)));
    pos += j["positives"].get<double>();
    n += j["instances"].get<double>();
  }
  char y[32];
  std::snprintf(y, sizeof y, "%.2f", 40.0 + 350.0 * (1.0 - pos / n));
  const auto prc = read_file(root / layout::figures("mux6") / "prc_DT.svg");
  CHECK(prc.find("points=\"70.00," + std::string(y) + " 530.00," + std::string(y) + "\"") != std::string::npos);

  // Composite bar heights recomputed from the composite table.
  const auto comp = parse_csv_records(read_file(root / layout::composite(eval)));
  const auto svg = read_file(root / layout::figures("mux6") / "cfibp.svg");
  std::size_t matched = 0;
  for (std::size_t i = 1; i < comp.size(); ++i)
    for (std::size_t a = 1; a + 1 < comp[0].size(); ++a) {
      const auto attr = "data-series=\"" + comp[0][a] + "\" data-category=\"" + comp[i][0] + "\" data-value=\"" +
                        format_double(parse_double(comp[i][a])) + "\"";
      matched += svg.find(attr) != std::string::npos;
    }
  CHECK(matched == (comp.size() - 1) * (comp[0].size() - 2));
}

TEST_CASE("two datasets: comparison phase, cross-dataset section and empty-selection banner") {
  const auto data = scratch("two_data");
  const auto out = scratch("two_out");
  write_mux(data, "a_mux", 21, 120);
  // Constant features carry no information, so selection keeps nothing.
  std::string flat = "c1,c2,Class\n";
  for (int i = 0; i < 60; ++i) flat += "1,2," + std::to_string(i % 2) + "\n";
  write_file_atomic(data / "b_flat.csv", flat);

  auto c = parse_config("data_dir = " + data.string() + "\noutput_dir = " + out.string() +
                        "\nexperiment_name = two\ncv_folds = 3\nalgorithms = NB,DT\nn_trials = 3\nnested_folds = 2\n"
                        "permutation_repeats = 1\nseed = 5\n");
  const auto p = plan(c);
  REQUIRE(p.has_phase(static_cast<int>(Phase::comparison)));
  const auto r = run(p, RunOptions{2, 0});
  for (const auto& f : r.failures) MESSAGE(f.job_id << ": " << f.message);
  REQUIRE(r.ok());
  const auto root = out / "two";
  for (const auto& rel : p.phases[9].front().outputs) CHECK(fs::exists(root / rel));
  const auto md = read_file(root / layout::summary_md());
  CHECK(md.find("## Cross-dataset comparison") != std::string::npos);
  CHECK(md.find("> **Warning:** feature selection kept no feature") != std::string::npos);
  const auto best = parse_csv_records(read_file(root / layout::comparison() / "best_algorithms.csv"));
  CHECK(best.size() == 3);
}
