#include "tabml/hpo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tabml/metrics.hpp"

namespace tabml {

const char* to_string(Sampler sampler) { return sampler == Sampler::tpe ? "tpe" : "random"; }

Sampler sampler_from_string(std::string_view text) {
  if (text == "tpe") return Sampler::tpe;
  if (text == "random") return Sampler::random;
  fail(ErrorKind::config, "unknown sampler '" + std::string(text) + "' (expected tpe or random)");
}

namespace {

constexpr double kGamma = 0.25;
constexpr int kCandidates = 24;

struct Bounds {
  double lo, hi;  // internal (possibly log) space
};

Bounds internal_bounds(const ParamDomain& d) {
  if (d.type == ParamDomain::Type::integer) return {d.lo - 0.5, d.hi + 0.5};
  if (d.log_scale) return {std::log(d.lo), std::log(d.hi)};
  return {d.lo, d.hi};
}

double to_internal(const ParamDomain& d, const ParamValue& v) {
  double x = std::holds_alternative<long long>(v) ? static_cast<double>(std::get<long long>(v)) : std::get<double>(v);
  return d.log_scale && d.type == ParamDomain::Type::real ? std::log(x) : x;
}

ParamValue from_internal(const ParamDomain& d, double u) {
  if (d.type == ParamDomain::Type::integer) {
    const auto v = static_cast<long long>(std::llround(u));
    return std::clamp(v, static_cast<long long>(d.lo), static_cast<long long>(d.hi));
  }
  const double x = d.log_scale ? std::exp(u) : u;
  return std::clamp(x, d.lo, d.hi);
}

ParamValue sample_domain(const ParamDomain& d, Rng& rng) {
  switch (d.type) {
    case ParamDomain::Type::integer: {
      const auto lo = static_cast<long long>(d.lo), hi = static_cast<long long>(d.hi);
      return lo + static_cast<long long>(rng.below(static_cast<std::size_t>(hi - lo + 1)));
    }
    case ParamDomain::Type::real: {
      if (d.log_scale) return std::clamp(std::exp(rng.uniform(std::log(d.lo), std::log(d.hi))), d.lo, d.hi);
      return rng.uniform(d.lo, d.hi);
    }
    case ParamDomain::Type::categorical: return d.choices[rng.below(d.choices.size())];
  }
  return 0LL;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Truncated Gaussian mixture over observed points plus a broad prior.
struct Parzen {
  Bounds b;
  std::vector<double> mu, sigma;

  Parzen(const std::vector<double>& points, Bounds bounds) : b(bounds) {
    const double width = b.hi - b.lo;
    double h = width;
    if (points.size() > 1) {
      const double sd = sample_sd(points);
      if (sd > 0) h = 1.06 * sd * std::pow(static_cast<double>(points.size()), -0.2);
    }
    // Floor on the bandwidth keeps a tight good set from collapsing the search.
    h = std::clamp(h, width / std::min(100.0, 1.0 + static_cast<double>(points.size())), width);
    for (double p : points) {
      mu.push_back(p);
      sigma.push_back(h);
    }
    mu.push_back((b.lo + b.hi) / 2.0);
    sigma.push_back(width);
  }

  double density(double u) const {
    double s = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
      const double z = (u - mu[k]) / sigma[k];
      const double mass = normal_cdf((b.hi - mu[k]) / sigma[k]) - normal_cdf((b.lo - mu[k]) / sigma[k]);
      s += std::exp(-0.5 * z * z) / (sigma[k] * std::sqrt(2.0 * std::numbers::pi) * std::max(mass, 1e-300));
    }
    return s / static_cast<double>(mu.size());
  }

  double sample(Rng& rng) const {
    const std::size_t k = rng.below(mu.size());
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double u = mu[k] + sigma[k] * rng.normal();
      if (u >= b.lo && u <= b.hi) return u;
    }
    return std::clamp(mu[k], b.lo, b.hi);
  }
};

ParamValue tpe_numeric(const ParamDomain& d, const std::vector<const Trial*>& good,
                       const std::vector<const Trial*>& bad, Rng& rng) {
  const Bounds bounds = internal_bounds(d);
  std::vector<double> g, l;
  for (const auto* t : good) g.push_back(to_internal(d, t->configuration.at(d.name)));
  for (const auto* t : bad) l.push_back(to_internal(d, t->configuration.at(d.name)));
  const Parzen pg(g, bounds), pb(l, bounds);
  double best_score = -std::numeric_limits<double>::infinity();
  ParamValue best = from_internal(d, pg.sample(rng));
  for (int c = 0; c < kCandidates; ++c) {
    const double u = pg.sample(rng);
    const ParamValue v = from_internal(d, u);
    const double at = to_internal(d, v);
    const double score = std::log(pg.density(at)) - std::log(pb.density(at));
    if (score > best_score) {
      best_score = score;
      best = v;
    }
  }
  return best;
}

ParamValue tpe_categorical(const ParamDomain& d, const std::vector<const Trial*>& good,
                           const std::vector<const Trial*>& bad, Rng& rng) {
  const std::size_t c = d.choices.size();
  std::vector<double> pg(c, 1.0), pb(c, 1.0);
  auto index = [&](const Trial* t) {
    const auto& s = std::get<std::string>(t->configuration.at(d.name));
    return static_cast<std::size_t>(std::find(d.choices.begin(), d.choices.end(), s) - d.choices.begin());
  };
  for (const auto* t : good) pg[index(t)] += 1.0;
  for (const auto* t : bad) pb[index(t)] += 1.0;
  const double sg = static_cast<double>(good.size() + c), sb = static_cast<double>(bad.size() + c);
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (int k = 0; k < kCandidates; ++k) {
    double r = rng.uniform() * sg;
    std::size_t pick = 0;
    while (pick + 1 < c && r >= pg[pick]) r -= pg[pick++];
    const double score = std::log(pg[pick] / sg) - std::log(pb[pick] / sb);
    if (score > best_score) {
      best_score = score;
      best = pick;
    }
  }
  return d.choices[best];
}

}  // namespace

Hyperparameters sample_random(const ClassifierSpec& spec, Rng& rng) {
  Hyperparameters hp = spec.defaults;
  for (const auto& d : spec.space) hp[d.name] = sample_domain(d, rng);
  return hp;
}

SweepResult run_sweep(const ClassifierSpec& spec, const TrialObjective& objective, const SweepOptions& options) {
  require(options.n_trials >= 1, "hpo: n_trials must be at least 1");
  SweepResult result;
  result.algorithm_id = spec.algorithm_id;
  result.seed = options.seed;
  result.n_trials_requested = options.n_trials;
  Rng rng(options.seed);
  const int startup = std::max(10, (options.n_trials + 4) / 5);
  for (int t = 0; t < options.n_trials; ++t) {
    Hyperparameters hp;
    if (options.sampler == Sampler::random || t < startup) {
      hp = sample_random(spec, rng);
    } else {
      std::vector<const Trial*> sorted;
      for (const auto& tr : result.trials) sorted.push_back(&tr);
      std::stable_sort(sorted.begin(), sorted.end(),
                       [](const Trial* a, const Trial* b) { return a->objective > b->objective; });
      const auto n_good = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(kGamma * double(sorted.size()))));
      const std::vector<const Trial*> good(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n_good));
      const std::vector<const Trial*> bad(sorted.begin() + static_cast<std::ptrdiff_t>(n_good), sorted.end());
      hp = spec.defaults;
      for (const auto& d : spec.space)
        hp[d.name] = d.type == ParamDomain::Type::categorical ? tpe_categorical(d, good, bad, rng)
                                                              : tpe_numeric(d, good, bad, rng);
    }
    Trial trial;
    trial.index = t;
    trial.configuration = hp;
    try {
      trial.nested_fold_scores = objective(hp);
      trial.objective = mean(trial.nested_fold_scores);
      if (!std::isfinite(trial.objective)) throw Error(ErrorKind::job_failed, "non-finite objective");
    } catch (const Error&) {
      trial.degenerate = true;
      trial.objective = 0.0;
    }
    result.trials.push_back(std::move(trial));
  }
  result.n_trials_completed = static_cast<int>(result.trials.size());
  std::size_t best = 0;
  for (std::size_t k = 1; k < result.trials.size(); ++k)
    if (result.trials[k].objective > result.trials[best].objective) best = k;
  result.best_configuration = result.trials[best].configuration;
  return result;
}

CvSplit nested_split(const Dataset& train, int k, std::uint64_t seed) {
  return make_cv(train, k, CvStrategy::stratified, derive_seed(seed, {"nested"}));
}

SweepResult optimize(const ClassifierSpec& spec, const Dataset& train, const SweepOptions& options) {
  if (!spec.tunable || spec.space.empty()) {
    SweepResult r;
    r.algorithm_id = spec.algorithm_id;
    r.bypassed = true;
    r.best_configuration = spec.defaults;
    r.seed = options.seed;
    return r;
  }
  const CvSplit split = nested_split(train, options.nested_folds, options.seed);
  std::vector<Dataset> fit_sets, score_sets;
  for (const auto& f : split.folds) {
    fit_sets.push_back(train.select_rows(f.train));
    score_sets.push_back(train.select_rows(f.test));
  }
  const auto objective = [&](const Hyperparameters& hp) {
    std::vector<double> scores;
    for (std::size_t k = 0; k < fit_sets.size(); ++k) {
      const auto model = fit_model(spec.algorithm_id, hp, fit_sets[k], derive_seed(options.seed, {"trial_fit"}),
                                   0, FitOptions{false});
      const auto p = model.predict_proba(score_sets[k]);
      const auto cm = confusion(p, score_sets[k].outcome);
      const double tpr = cm.tp + cm.fn > 0 ? double(cm.tp) / double(cm.tp + cm.fn) : kNaN;
      const double tnr = cm.tn + cm.fp > 0 ? double(cm.tn) / double(cm.tn + cm.fp) : kNaN;
      if (!std::isfinite(tpr) || !std::isfinite(tnr))
        throw Error(ErrorKind::job_failed, "nested fold holds a single class");
      scores.push_back((tpr + tnr) / 2.0);
    }
    return scores;
  };
  return run_sweep(spec, objective, options);
}

std::string trials_to_csv(const ClassifierSpec& spec, const SweepResult& result) {
  std::vector<std::string> header{"trial"};
  for (const auto& d : spec.space) header.push_back(csv_field(d.name));
  header.push_back("objective");
  std::size_t folds = 0;
  for (const auto& t : result.trials) folds = std::max(folds, t.nested_fold_scores.size());
  for (std::size_t k = 0; k < folds; ++k) header.push_back("fold_" + std::to_string(k + 1));
  header.push_back("degenerate");
  std::string out = join(header, ",") + "\n";
  for (const auto& t : result.trials) {
    std::vector<std::string> row{std::to_string(t.index)};
    for (const auto& d : spec.space) row.push_back(csv_field(to_string(t.configuration.at(d.name))));
    row.push_back(format_double(t.objective));
    for (std::size_t k = 0; k < folds; ++k)
      row.push_back(k < t.nested_fold_scores.size() ? format_double(t.nested_fold_scores[k]) : "");
    row.push_back(t.degenerate ? "1" : "0");
    out += join(row, ",") + "\n";
  }
  return out;
}

}  // namespace tabml
