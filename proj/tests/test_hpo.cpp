#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "tabml/hpo.hpp"

using namespace tabml;

namespace {

Dataset blobs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.name = "h";
  d.features = {{"a", FeatureKind::quantitative}, {"b", FeatureKind::quantitative}};
  d.values = Matrix(n, 2);
  d.missing.assign(n * 2, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    d.outcome.push_back(y);
    d.instance_ids.push_back("id" + std::to_string(i));
    d.values(i, 0) = rng.normal() + (y ? 0.8 : -0.8);
    d.values(i, 1) = rng.normal();
  }
  return d;
}

ClassifierSpec one_real(bool log_scale, double lo, double hi) {
  ClassifierSpec s;
  s.algorithm_id = "X";
  s.tunable = true;
  s.space = {{"x", ParamDomain::Type::real, lo, hi, log_scale, {}}};
  s.defaults = {{"x", lo}};
  return s;
}

}  // namespace

TEST_CASE("sampler names") {
  CHECK(sampler_from_string("tpe") == Sampler::tpe);
  CHECK(std::string(to_string(Sampler::random)) == "random");
  CHECK_THROWS_AS(sampler_from_string("grid"), Error);
}

TEST_CASE("single trial is the best") {
  const auto& spec = classifier_spec("DT");
  const auto r = run_sweep(spec, [](const Hyperparameters&) { return std::vector<double>{0.4, 0.6}; }, {1, Sampler::tpe, 3});
  REQUIRE(r.trials.size() == 1);
  CHECK(r.best_configuration == r.trials[0].configuration);
  CHECK(r.trials[0].objective == 0.5);
  CHECK(r.n_trials_completed == 1);
}

TEST_CASE("every sampled configuration lies in its domain") {
  for (const auto& id : builtin_algorithms()) {
    const auto& spec = classifier_spec(id);
    if (!spec.tunable) continue;
    for (auto sampler : {Sampler::random, Sampler::tpe}) {
      Rng noise(5);
      const auto r = run_sweep(
          spec, [&](const Hyperparameters&) { return std::vector<double>{noise.uniform()}; }, {60, sampler, 11});
      for (const auto& t : r.trials) {
        for (const auto& d : spec.space) CHECK(d.contains(t.configuration.at(d.name)));
        CHECK(complete_hyperparameters(spec, t.configuration) == t.configuration);
      }
    }
  }
}

TEST_CASE("best is the argmax with ties to the lowest index") {
  const auto& spec = classifier_spec("KNN");
  int calls = 0;
  const auto r = run_sweep(
      spec, [&](const Hyperparameters&) { return std::vector<double>{(calls++ % 7) == 3 ? 0.9 : 0.2}; },
      {30, Sampler::tpe, 2});
  for (const auto& t : r.trials) CHECK(r.trials[3].objective >= t.objective);
  CHECK(r.best_configuration == r.trials[3].configuration);
}

TEST_CASE("same seed gives the same trial sequence") {
  const auto& spec = classifier_spec("GB");
  auto objective = [](const Hyperparameters& hp) {
    return std::vector<double>{1.0 / (1.0 + std::abs(std::log(get_real(hp, "learning_rate") / 0.05)))};
  };
  const auto a = run_sweep(spec, objective, {40, Sampler::tpe, 9});
  const auto b = run_sweep(spec, objective, {40, Sampler::tpe, 9});
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t k = 0; k < a.trials.size(); ++k) CHECK(a.trials[k].configuration == b.trials[k].configuration);
  CHECK(a.best_configuration == b.best_configuration);
  const auto c = run_sweep(spec, objective, {40, Sampler::tpe, 10});
  CHECK_FALSE(c.trials[0].configuration == a.trials[0].configuration);
}

TEST_CASE("random sampler covers a tiny discrete domain") {
  ClassifierSpec s;
  s.algorithm_id = "T";
  s.tunable = true;
  s.space = {{"k", ParamDomain::Type::integer, 1, 3, false, {}}, {"w", ParamDomain::Type::categorical, 0, 0, false, {"a", "b"}}};
  s.defaults = {{"k", 1LL}, {"w", std::string("a")}};
  // Exact enumeration of the domain: 3 * 2 configurations.
  std::set<std::pair<long long, std::string>> all;
  for (long long k = 1; k <= 3; ++k)
    for (const auto* w : {"a", "b"}) all.insert({k, w});
  std::map<std::pair<long long, std::string>, int> seen;
  Rng rng(1);
  for (int t = 0; t < 600; ++t) {
    const auto hp = sample_random(s, rng);
    seen[{get_int(hp, "k"), get_choice(hp, "w")}]++;
  }
  CHECK(seen.size() == all.size());
  for (const auto& cfg : all) CHECK(seen[cfg] > 50);
}

TEST_CASE("TPE finds the top decile of a unimodal 1-D objective") {
  const auto spec = one_real(true, 1e-5, 1e2);
  auto f = [](double x) { return std::exp(-std::pow(std::log10(x) + 2.0, 2)); };
  // Exhaustive grid oracle over the log domain.
  std::vector<double> grid;
  for (int k = 0; k <= 200; ++k) grid.push_back(f(std::pow(10.0, -5.0 + 7.0 * k / 200.0)));
  std::sort(grid.begin(), grid.end());
  const double top_decile = grid[static_cast<std::size_t>(0.9 * double(grid.size() - 1))];
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = run_sweep(
        spec, [&](const Hyperparameters& hp) { return std::vector<double>{f(get_real(hp, "x"))}; }, {50, Sampler::tpe, seed});
    CHECK(f(get_real(r.best_configuration, "x")) >= top_decile);
  }
}

TEST_CASE("TPE concentrates after the random start-up phase") {
  const auto spec = one_real(false, 0.0, 1.0);
  auto f = [](double x) { return 1.0 - std::abs(x - 0.7); };
  const auto r = run_sweep(
      spec, [&](const Hyperparameters& hp) { return std::vector<double>{f(get_real(hp, "x"))}; }, {60, Sampler::tpe, 4});
  double early = 0.0, late = 0.0;
  for (int t = 0; t < 12; ++t) early += std::abs(get_real(r.trials[t].configuration, "x") - 0.7);
  for (int t = 48; t < 60; ++t) late += std::abs(get_real(r.trials[t].configuration, "x") - 0.7);
  CHECK(late < early);
}

TEST_CASE("failing trials score zero with a flag") {
  const auto& spec = classifier_spec("DT");
  int calls = 0;
  const auto r = run_sweep(
      spec,
      [&](const Hyperparameters&) -> std::vector<double> {
        if (calls++ == 0) throw Error(ErrorKind::job_failed, "single class");
        return {0.7};
      },
      {3, Sampler::random, 1});
  CHECK(r.trials[0].degenerate);
  CHECK(r.trials[0].objective == 0.0);
  CHECK_FALSE(r.trials[1].degenerate);
}

TEST_CASE("untunable algorithms bypass the sweep") {
  for (const auto* id : {"NB", "LCS"}) {
    const auto r = optimize(classifier_spec(id), blobs(30, 1), {5, Sampler::tpe, 1});
    CHECK(r.bypassed);
    CHECK(r.trials.empty());
    CHECK(r.best_configuration == classifier_spec(id).defaults);
  }
}

TEST_CASE("nested folds stay inside the outer training fold") {
  const auto data = blobs(90, 2);
  const auto outer = make_cv(data, 3, CvStrategy::stratified, 5);
  for (const auto& fold : outer.folds) {
    const auto train = data.select_rows(fold.train);
    std::set<std::string> test_ids;
    for (auto i : fold.test) test_ids.insert(data.instance_ids[i]);
    const auto inner = nested_split(train, 3, 8);
    for (const auto& nf : inner.folds) {
      for (auto i : nf.train) CHECK(test_ids.count(train.instance_ids[i]) == 0);
      for (auto i : nf.test) CHECK(test_ids.count(train.instance_ids[i]) == 0);
    }
  }
}

TEST_CASE("optimize scores mean nested balanced accuracy") {
  const auto data = blobs(120, 3);
  const auto r = optimize(classifier_spec("DT"), data, {6, Sampler::tpe, 12});
  REQUIRE(r.trials.size() == 6);
  for (const auto& t : r.trials) {
    REQUIRE(t.nested_fold_scores.size() == 3);
    CHECK(t.objective == doctest::Approx(mean(t.nested_fold_scores)).epsilon(1e-15));
    CHECK(t.objective >= 0.0);
    CHECK(t.objective <= 1.0);
  }
  const auto again = optimize(classifier_spec("DT"), data, {6, Sampler::tpe, 12});
  CHECK(trials_to_csv(classifier_spec("DT"), r) == trials_to_csv(classifier_spec("DT"), again));
  const auto csv = trials_to_csv(classifier_spec("DT"), r);
  CHECK(csv.rfind("trial,max_depth,min_samples_leaf,objective,fold_1,fold_2,fold_3,degenerate\n", 0) == 0);
}
