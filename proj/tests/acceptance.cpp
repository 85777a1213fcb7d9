// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance --criterion N   (0 runs all)

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "pipeline/layout.hpp"
#include "pipeline/stages.hpp"
#include "tabml/common.hpp"
#include "tabml/featimp.hpp"
#include "tabml/log.hpp"
#include "tabml/metrics.hpp"
#include "tabml/pipeline.hpp"
#include "tabml/simdata.hpp"
#include "tabml/stats.hpp"

using namespace tabml;
namespace fs = std::filesystem;

namespace {

fs::path g_work;
int g_trials = 50;
int g_jobs = 1;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back((ok ? "ok " : "FAILED ") + what);
  }
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double minutes_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
}

fs::path write_data(const std::string& name, const std::vector<std::pair<std::string, Dataset>>& datasets) {
  const auto dir = g_work / name / "data";
  fs::remove_all(dir);
  for (const auto& [ds, d] : datasets) write_csv(d, DatasetConfig{}, dir / (ds + ".csv"));
  return dir;
}

/// Runs every phase and returns the experiment directory.
fs::path run_config(const fs::path& data_dir, const fs::path& out_dir, const std::string& extra, int jobs) {
  fs::remove_all(out_dir);
  const auto config = parse_config("data_dir = " + data_dir.string() + "\noutput_dir = " + out_dir.string() +
                                   "\nexperiment_name = experiment\nseed = 2024\nn_trials = " +
                                   std::to_string(g_trials) + "\n" + extra);
  const auto result = run(plan(config), RunOptions{jobs > 0 ? jobs : g_jobs, 0});
  for (const auto& f : result.failures) std::fprintf(stderr, "job %s failed: %s\n", f.job_id.c_str(), f.message.c_str());
  if (!result.ok()) fail(ErrorKind::job_failed, out_dir.string() + ": pipeline run failed");
  return config.experiment_dir();
}

fs::path run_experiment(const std::string& name, const std::vector<std::pair<std::string, Dataset>>& datasets,
                        const std::string& extra) {
  return run_config(write_data(name, datasets), g_work / name / "out", extra, 0);
}

/// Mean test-fold value of a metric per algorithm, from the aggregate table.
std::map<std::string, double> means(const fs::path& root, const std::string& ds, Metric m) {
  std::map<std::string, double> out;
  const auto t = parse_csv_records(read_file(root / layout::aggregate(layout::evaluation(ds))));
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i][1] == metric_name(m)) out[t[i][0]] = parse_double(t[i][2]);
  return out;
}

Dataset mux(int bits, std::size_t n, std::uint64_t seed) { return gen_mux({bits, n, seed}); }

Dataset snp(SnpArchitecture arch, std::uint64_t seed) {
  SnpSpec s;
  s.architecture = arch;
  s.seed = seed;
  return gen_snp(s);
}

void check_auc(Outcome& o, const std::map<std::string, double>& auc, const std::string& alg, double bound, bool at_least) {
  const auto it = auc.find(alg);
  if (it == auc.end()) {
    o.check(false, alg + " missing");
    return;
  }
  o.check(at_least ? it->second >= bound : it->second <= bound,
          alg + " ROC-AUC " + fmt(it->second) + (at_least ? " >= " : " <= ") + fmt(bound, 2));
}

// 6-bit MUX, 500 instances, every algorithm, default settings.
Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto root = run_experiment("c1_mux6", {{"mux6", mux(6, 500, 61)}}, "");
  const double took = minutes_since(t0);
  const auto auc = means(root, "mux6", Metric::roc_auc);
  for (const auto* a : {"DT", "RF", "GB", "KNN", "SVM", "LCS"}) check_auc(o, auc, a, 0.95, true);
  for (const auto* a : {"NB", "LR"}) check_auc(o, auc, a, 0.75, false);
  check_auc(o, auc, "GP", 0.90, true);
  o.check(took < 20.0, "runtime " + fmt(took, 1) + " min < 20");
  return o;
}

// 11-bit MUX, 1000 instances.
Outcome criterion2() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto root = run_experiment("c2_mux11", {{"mux11", mux(11, 1000, 111)}}, "");
  const double took = minutes_since(t0);
  const auto auc = means(root, "mux11", Metric::roc_auc);
  for (const auto* a : {"RF", "GB", "LCS"}) check_auc(o, auc, a, 0.95, true);
  // KNN on the 6-bit problem under the same settings.
  const auto small = run_experiment("c2_mux6_knn", {{"mux6", mux(6, 500, 61)}}, "algorithms = KNN\n");
  const double knn6 = means(small, "mux6", Metric::roc_auc).at("KNN");
  o.check(auc.at("KNN") < knn6, "KNN 11-bit " + fmt(auc.at("KNN")) + " < 6-bit " + fmt(knn6));
  o.check(took < 45.0, "runtime " + fmt(took, 1) + " min < 45");
  return o;
}

// 20-bit MUX, 2000 instances.
Outcome criterion3() {
  Outcome o;
  const auto root = run_experiment("c3_mux20", {{"mux20", mux(20, 2000, 201)}}, "algorithms = GB,LCS\n");
  const auto auc = means(root, "mux20", Metric::roc_auc);
  for (const auto* a : {"GB", "LCS"}) check_auc(o, auc, a, 0.95, true);

  const auto t = parse_csv_records(read_file(root / layout::composite(layout::evaluation("mux20"))));
  const std::size_t col = static_cast<std::size_t>(
      std::find(t[0].begin(), t[0].end(), "composite") - t[0].begin());
  double lowest_address = 1e300, highest_register = -1e300;
  std::size_t address = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double v = parse_double(t[i][col]);
    if (t[i][0][0] == 'A') lowest_address = std::min(lowest_address, v), ++address;
    else highest_register = std::max(highest_register, v);
  }
  o.check(address == 4 && lowest_address > highest_register,
          "composite importance: lowest address bit " + fmt(lowest_address) + " > highest register bit " +
              fmt(highest_register));
  return o;
}

/// Positions (0-based) of `names` in the descending ranking of `scores`.
std::vector<std::size_t> ranks_of(const std::vector<double>& scores, const std::vector<std::string>& all,
                                  const std::vector<std::string>& names) {
  const auto order = rank_descending(scores, all);
  std::vector<std::size_t> out;
  for (const auto& n : names)
    for (std::size_t r = 0; r < order.size(); ++r)
      if (all[order[r]] == n) out.push_back(r);
  return out;
}

// Pure 2-locus epistasis, h = 0.4.
Outcome criterion4() {
  Outcome o;
  int ms_hits = 0, mi_hits = 0;
  std::string detail;
  for (std::uint64_t rep = 1; rep <= 10; ++rep) {
    const auto d = with_feature_types(snp(SnpArchitecture::epistasis2, 400 + rep), 10);
    const auto names = d.feature_names();
    const std::vector<std::string> relevant{"M0P0", "M0P1"};
    const auto ms = ranks_of(multisurf(d, {2000, rep}), names, relevant);
    const auto mi = ranks_of(mutual_info(d, 10), names, relevant);
    const bool ms_ok = ms[0] < 4 && ms[1] < 4;
    const bool mi_ok = mi[0] >= 10 && mi[1] >= 10;
    ms_hits += ms_ok;
    mi_hits += mi_ok;
    detail += " [" + std::to_string(ms[0] + 1) + "," + std::to_string(ms[1] + 1) + "|" + std::to_string(mi[0] + 1) +
              "," + std::to_string(mi[1] + 1) + "]";
  }
  o.check(ms_hits >= 8, "MultiSURF top-4 in " + std::to_string(ms_hits) + "/10");
  o.check(mi_hits >= 8, "MI outside top-10 in " + std::to_string(mi_hits) + "/10");
  o.notes.push_back("ranks [MultiSURF|MI]" + detail);

  const auto root = run_experiment("c4_epistasis2", {{"epistasis2", snp(SnpArchitecture::epistasis2, 401)}},
                                   "algorithms = NB,LR,GB,LCS\n");
  const auto auc = means(root, "epistasis2", Metric::roc_auc);
  for (const auto* a : {"NB", "LR"}) check_auc(o, auc, a, 0.55, false);
  for (const auto* a : {"GB", "LCS"}) check_auc(o, auc, a, 0.70, true);
  return o;
}

// Univariate SNP, h = 0.4, every algorithm.
Outcome criterion5() {
  Outcome o;
  const auto root = run_experiment("c5_univariate", {{"univariate", snp(SnpArchitecture::univariate, 501)}}, "");
  for (const auto& [a, v] : means(root, "univariate", Metric::roc_auc)) check_auc(o, {{a, v}}, a, 0.65, true);
  return o;
}

// Same config and seed, different parallelism.
Outcome criterion6() {
  Outcome o;
  const std::vector<std::pair<std::string, Dataset>> data{{"mux6", mux(6, 200, 6)},
                                                          {"snp", [] {
                                                             SnpSpec s;
                                                             s.architecture = SnpArchitecture::additive4;
                                                             s.n_features = 12;
                                                             s.n_instances = 200;
                                                             s.heritability = 0.2;
                                                             s.seed = 6;
                                                             return gen_snp(s);
                                                           }()}};
  const std::string extra = "cv_folds = 4\nnested_folds = 2\npermutation_repeats = 3\n";
  // Identity does not depend on search depth.
  g_trials = 5;
  const auto data_dir = write_data("c6", data);
  const auto a = run_config(data_dir, g_work / "c6" / "serial", extra, 1);
  const auto b = run_config(data_dir, g_work / "c6" / "parallel", extra, 4);
  for (const auto& [ds, d] : data) {
    const auto rel = layout::metrics(layout::evaluation(ds));
    o.check(read_file(a / rel) == read_file(b / rel), ds + " metrics.csv identical");
  }
  o.check(read_file(a / layout::summary_md()) == read_file(b / layout::summary_md()), "summary.md identical");
  const auto ma = nlohmann::json::parse(read_file(a / layout::manifest()));
  const auto mb = nlohmann::json::parse(read_file(b / layout::manifest()));
  std::size_t same = 0, total = 0;
  for (std::size_t i = 0; i < ma["artifacts"].size(); ++i) {
    const auto path = ma["artifacts"][i]["path"].get<std::string>();
    ++total;
    same += ma["artifacts"][i] == mb["artifacts"][i];
  }
  o.check(same == total, std::to_string(same) + "/" + std::to_string(total) + " other artifacts identical");
  return o;
}

/// Every composition of at most `n` items into `parts` non-empty groups.
void compositions(std::size_t total, std::size_t parts, std::vector<std::size_t>& cur,
                  const std::function<void(const std::vector<std::size_t>&)>& f) {
  if (cur.size() == parts) {
    f(cur);
    return;
  }
  std::size_t used = 0;
  for (auto c : cur) used += c;
  const std::size_t left = parts - cur.size() - 1;
  for (std::size_t s = 1; used + s + left <= total; ++s) {
    cur.push_back(s);
    compositions(total, parts, cur, f);
    cur.pop_back();
  }
}

// Rank statistics against enumeration oracles; ROC-AUC against pair counting.
Outcome criterion7() {
  Outcome o;
  const double tol = 1e-9;
  // Two pooled samples per size: all distinct, and heavily tied.
  auto pooled = [](std::size_t n, bool ties) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = ties ? static_cast<double>(i / 3) : static_cast<double>(i) + 0.5;
    return v;
  };
  std::size_t kw_cases = 0, mwu_cases = 0, w_cases = 0;
  double kw_err = 0, mwu_err = 0, w_err = 0;
  for (std::size_t groups = 2; groups <= 9; ++groups)
    for (std::size_t n = groups; n <= 9; ++n) {
      std::vector<std::size_t> cur;
      compositions(n, groups, cur, [&](const std::vector<std::size_t>& sizes) {
        std::size_t sum = 0;
        for (auto s : sizes) sum += s;
        if (sum != n) return;
        for (bool ties : {false, true}) {
          const auto values = pooled(n, ties);
          oracle::for_each_assignment(sizes, [&](const std::vector<int>& labels) {
            const auto g = oracle::split_by(values, labels, groups);
            const double h = stats::kruskal_wallis(g).statistic;
            kw_err = std::max(kw_err, std::abs(h - oracle::kruskal_h(g)));
            ++kw_cases;
            if (groups == 2) {
              const double u = stats::mann_whitney_u(g[0], g[1]).statistic;
              mwu_err = std::max(mwu_err, std::abs(u - oracle::mwu_u(g[0], g[1])));
              ++mwu_cases;
            }
          });
        }
      });
    }
  // Signed-rank: every sign pattern of paired differences, n <= 9.
  for (std::size_t n = 1; n <= 9; ++n)
    for (int variant = 0; variant < 3; ++variant)
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<double> a(n), b(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const double mag = variant == 0 ? static_cast<double>(i + 1) : variant == 1 ? static_cast<double>(i / 2 + 1)
                                                                                      : static_cast<double>(i % 3);
          a[i] = (mask >> i & 1u) ? mag : -mag;
        }
        const auto r = stats::wilcoxon_signed_rank(a, b);
        bool any = false;
        for (double v : a) any = any || v != 0.0;
        if (!any) continue;
        w_err = std::max(w_err, std::abs(r.statistic - oracle::wilcoxon_w(a, b)));
        ++w_cases;
      }
  o.check(kw_err <= tol, "Kruskal-Wallis H max error " + std::to_string(kw_err) + " over " + std::to_string(kw_cases) +
                             " assignments");
  o.check(mwu_err <= tol, "Mann-Whitney U max error " + std::to_string(mwu_err) + " over " +
                              std::to_string(mwu_cases) + " assignments");
  o.check(w_err <= tol, "Wilcoxon W max error " + std::to_string(w_err) + " over " + std::to_string(w_cases) +
                            " sign patterns");

  Rng rng(7);
  std::size_t exact = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(29);
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<double>(rng.below(12)) / 12.0;
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 0;
    y[n - 1] = 1;
    exact += roc_auc(p, y) == oracle::pairwise_auc(p, y);
  }
  o.check(exact == 1000, "ROC-AUC equals the pairwise oracle exactly in " + std::to_string(exact) + "/1000");
  return o;
}

std::string leakage_csv(Rng& rng, std::size_t n) {
  std::string s = "q1,q2,c1,Class\n";
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    auto cell = [&](const std::string& v) { return rng.uniform() < 0.1 ? std::string("NA") : v; };
    s += cell(format_double(rng.normal() + y)) + "," + cell(format_double(2 * rng.normal())) + "," +
         cell(std::to_string(rng.below(3))) + "," + std::to_string(y) + "\n";
  }
  return s;
}

/// Phases 1 to `last` on one CSV.
fs::path run_phases(const std::string& name, const std::string& csv, int last, const std::string& extra = "") {
  const auto base = g_work / name;
  fs::remove_all(base);
  write_file_atomic(base / "data" / "d.csv", csv);
  const auto config = parse_config("data_dir = " + (base / "data").string() + "\noutput_dir = " + (base / "out").string() +
                                   "\nexperiment_name = e\nseed = 88\n" + extra);
  const auto p = plan(config);
  for (int phase = 1; phase <= last; ++phase)
    if (!run(p, RunOptions{1, phase}).ok()) fail(ErrorKind::job_failed, name + ": phase " + std::to_string(phase));
  return config.experiment_dir();
}

// Leakage: test rows never reach a recipe; selection is per training fold.
Outcome criterion8() {
  Outcome o;
  Rng rng(8);
  const auto original = leakage_csv(rng, 300);
  const auto a = run_phases("c8_original", original, 3);

  // Corrupt every test row of every fold in turn is equivalent to corrupting
  // all rows; check fold by fold instead so train rows stay intact.
  const auto split = cv_split_from_json(nlohmann::json::parse(read_file(a / layout::split("d"))));
  std::size_t unchanged = 0, mutated_folds = 0;
  for (std::size_t f = 0; f < split.folds.size(); ++f) {
    auto rows = parse_csv_records(original);
    for (auto i : split.folds[f].test) {
      auto& r = rows[i + 1];
      r[0] = "1000000";
      r[1] = "NA";
      r[2] = "2";
    }
    std::string text;
    for (const auto& r : rows) text += join(r, ",") + "\n";
    const auto b = run_phases("c8_mutated", text, 3);
    const int fold = static_cast<int>(f) + 1;
    mutated_folds += read_file(a / layout::fold_test("d", fold)) != read_file(b / layout::fold_test("d", fold));
    unchanged += read_file(a / layout::recipe("d", fold)) == read_file(b / layout::recipe("d", fold)) &&
                 read_file(a / layout::split("d")) == read_file(b / layout::split("d"));
  }
  o.check(mutated_folds == split.folds.size() && unchanged == split.folds.size(),
          "recipe unchanged after mutating the test rows, " + std::to_string(unchanged) + "/" +
              std::to_string(split.folds.size()) + " folds");

  SnpSpec s;
  s.architecture = SnpArchitecture::heterogeneous4;
  s.seed = 808;
  std::string het;
  {
    const auto d = gen_snp(s);
    het = to_csv(d, DatasetConfig{});
  }
  const auto h = run_phases("c8_heterogeneous4", het, 5);
  std::set<std::vector<std::string>> distinct;
  for (int f = 1; f <= 10; ++f)
    distinct.insert(feature_scores_from_csv(read_file(h / layout::selected("d", f)), f).selected_features);
  o.check(distinct.size() > 1, std::to_string(distinct.size()) + " distinct selected subsets over 10 training folds");
  return o;
}

// Metric invariants over random score/label vectors.
Outcome criterion9() {
  Outcome o;
  Rng rng(9);
  std::size_t flip = 0, monotone = 0, no_skill = 0, swaps = 0;
  const std::size_t trials = 10000;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> p(n), q(n), g(n);
    std::vector<int> y(n), yf(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Grid points never equal the 0.5 threshold.
      p[i] = (static_cast<double>(rng.below(50)) + 0.5) / 50.0;
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 0;
    y[1] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = 1.0 - p[i];
      yf[i] = 1 - y[i];
      g[i] = std::exp(8.0 * p[i]) - 3.0;
    }
    const double auc = roc_auc(p, y);
    flip += roc_auc(q, yf) == auc && std::abs(roc_auc(p, yf) - (1.0 - auc)) <= 1e-12;
    monotone += roc_auc(g, y) == auc;
    double pos = 0;
    for (int v : y) pos += v;
    no_skill += prc_curve(p, y).no_skill == pos / static_cast<double>(n);
    const auto m = metric_set(confusion(p, y), p, y);
    const auto mf = metric_set(confusion(q, yf), q, yf);
    swaps += m[Metric::sensitivity] == mf[Metric::specificity] && m[Metric::specificity] == mf[Metric::sensitivity] &&
             m[Metric::precision] == mf[Metric::npv] && m[Metric::npv] == mf[Metric::precision] &&
             std::abs(m[Metric::balanced_accuracy] - mf[Metric::balanced_accuracy]) <= 1e-12 &&
             m[Metric::accuracy] == mf[Metric::accuracy];
  }
  auto line = [&](std::size_t ok, const char* what) {
    o.check(ok == trials, std::string(what) + ": " + std::to_string(trials - ok) + " violations in " +
                              std::to_string(trials));
  };
  line(flip, "label flip (AUC symmetric, 1 - AUC without score flip)");
  line(swaps, "label flip swaps sensitivity/specificity and precision/NPV");
  line(monotone, "ROC-AUC invariant to a monotone transform");
  line(no_skill, "PRC no-skill equals the positive fraction");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int which = 0;
  std::string work;
  app.add_option("--criterion", which, "1-9; 0 runs all")->check(CLI::Range(0, 9));
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--trials", g_trials, "HPO trials per model");
  app.add_option("--jobs", g_jobs, "Parallel jobs");
  CLI11_PARSE(app, argc, argv);
  g_work = work.empty() ? fs::temp_directory_path() / "tabml_acceptance" : fs::path(work);
  set_log_level(LogLevel::quiet);

  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  bool all = true;
  for (int c = 1; c <= 9; ++c) {
    if (which && c != which) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(c - 1)]();
    } catch (const std::exception& e) {
      o.check(false, std::string("error: ") + e.what());
    }
    std::string notes;
    for (const auto& n : o.notes) notes += (notes.empty() ? "" : "; ") + n;
    std::printf("criterion %d: %s (%s min) %s\n", c, o.pass ? "PASS" : "FAIL", fmt(minutes_since(t0), 1).c_str(),
                notes.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
