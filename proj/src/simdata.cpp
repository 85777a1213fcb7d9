#include "tabml/simdata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tabml {

int mux_address_bits(int total_bits) {
  for (int k = 2; k <= 7; ++k)
    if (k + (1 << k) == total_bits) return k;
  fail(ErrorKind::invalid_argument,
       "multiplexer size " + std::to_string(total_bits) + " is not one of 6, 11, 20, 37, 70, 135");
}

Dataset gen_mux(const MuxSpec& spec) {
  const int k = mux_address_bits(spec.total_bits);
  require(spec.n_instances >= 1, "gen_mux: n_instances must be at least 1");
  const auto bits = static_cast<std::size_t>(spec.total_bits);
  Dataset d;
  d.name = "mux" + std::to_string(spec.total_bits);
  for (int a = 0; a < k; ++a) d.features.push_back({"A" + std::to_string(a), FeatureKind::categorical});
  for (int r = 0; r < (1 << k); ++r) d.features.push_back({"R" + std::to_string(r), FeatureKind::categorical});
  d.values = Matrix(spec.n_instances, bits);
  d.missing.assign(spec.n_instances * bits, 0);
  d.outcome.resize(spec.n_instances);
  Rng rng(derive_seed(spec.seed, {"mux", std::to_string(spec.total_bits)}));
  for (std::size_t i = 0; i < spec.n_instances; ++i) {
    std::size_t address = 0;
    for (std::size_t j = 0; j < bits; ++j) {
      const auto bit = rng.below(2);
      d.values(i, j) = static_cast<double>(bit);
      if (j < static_cast<std::size_t>(k)) address = address * 2 + bit;
    }
    d.outcome[i] = static_cast<int>(d.values(i, static_cast<std::size_t>(k) + address));
  }
  d.features = infer_feature_types(d, 2, d.feature_names());
  return d;
}

const char* to_string(SnpArchitecture a) {
  switch (a) {
    case SnpArchitecture::univariate: return "univariate";
    case SnpArchitecture::additive4: return "additive4";
    case SnpArchitecture::heterogeneous4: return "heterogeneous4";
    case SnpArchitecture::epistasis2: return "epistasis2";
    case SnpArchitecture::het_epistasis2x2: return "het_epistasis2x2";
    case SnpArchitecture::epistasis3: return "epistasis3";
  }
  return "univariate";
}

SnpArchitecture snp_architecture_from_string(std::string_view text) {
  for (auto a : {SnpArchitecture::univariate, SnpArchitecture::additive4, SnpArchitecture::heterogeneous4,
                 SnpArchitecture::epistasis2, SnpArchitecture::het_epistasis2x2, SnpArchitecture::epistasis3})
    if (text == to_string(a)) return a;
  fail(ErrorKind::invalid_argument, "unknown SNP architecture '" + std::string(text) + "'");
}

namespace {

struct Shape {
  std::vector<std::vector<std::size_t>> subgroups;
  bool additive = false;
};

Shape shape_of(SnpArchitecture a) {
  switch (a) {
    case SnpArchitecture::univariate: return {{{0}}, false};
    case SnpArchitecture::additive4: return {{{0, 1, 2, 3}}, true};
    case SnpArchitecture::heterogeneous4: return {{{0}, {1}, {2}, {3}}, false};
    case SnpArchitecture::epistasis2: return {{{0, 1}}, false};
    case SnpArchitecture::het_epistasis2x2: return {{{0, 1}, {2, 3}}, false};
    case SnpArchitecture::epistasis3: return {{{0, 1, 2}}, false};
  }
  return {{{0}}, false};
}

struct Polynomial {
  double vmin = 0.0, vmax = 0.0, variance = 0.0;
};

/// Range and variance of f(c) over one subgroup's m loci.
Polynomial polynomial(std::size_t m, bool additive, double pi) {
  Polynomial p;
  p.vmin = std::numeric_limits<double>::infinity();
  p.vmax = -p.vmin;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    double v = additive ? 0.0 : 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double c = ((mask >> i) & 1) ? 1.0 : 0.0;
      v = additive ? v + (c - pi) : v * (c - pi);
    }
    p.vmin = std::min(p.vmin, v);
    p.vmax = std::max(p.vmax, v);
  }
  const double var1 = pi * (1.0 - pi);
  p.variance = additive ? static_cast<double>(m) * var1 : std::pow(var1, static_cast<double>(m));
  return p;
}

/// Feasible heritability at prevalence K: the largest b keeping every
/// penetrance in [0, 1].
double heritability_at(const Polynomial& p, double K) {
  const double b = std::min(K / -p.vmin, (1.0 - K) / p.vmax);
  return b * b * p.variance / (K * (1.0 - K));
}

double carrier_probability(double maf) { return 1.0 - (1.0 - maf) * (1.0 - maf); }

int hwe_genotype(double maf, Rng& rng) {
  const double u = rng.uniform();
  const double p0 = (1.0 - maf) * (1.0 - maf);
  const double p1 = 2.0 * maf * (1.0 - maf);
  return u < p0 ? 0 : (u < p0 + p1 ? 1 : 2);
}

}  // namespace

double PenetranceModel::penetrance(const std::vector<int>& genotypes) const {
  double v = additive ? 0.0 : 1.0;
  for (int g : genotypes) {
    const double c = g >= 1 ? 1.0 : 0.0;
    v = additive ? v + (c - pi) : v * (c - pi);
  }
  return std::clamp(prevalence + b * v, 0.0, 1.0);
}

std::size_t relevant_feature_count(SnpArchitecture architecture) {
  std::size_t n = 0;
  for (const auto& g : shape_of(architecture).subgroups) n += g.size();
  return n;
}

namespace {

double best_prevalence(const Polynomial& p, double* best_h) {
  double best_k = 0.5, h_max = -1.0;
  for (int s = 1; s < 100000; ++s) {
    const double K = s / 100000.0;
    const double h = heritability_at(p, K);
    if (h > h_max) h_max = h, best_k = K;
  }
  // The optimum sits where both bounds bind.
  const double K_star = -p.vmin / (p.vmax - p.vmin);
  if (K_star > 0 && K_star < 1 && heritability_at(p, K_star) >= h_max)
    h_max = heritability_at(p, K_star), best_k = K_star;
  if (best_h) *best_h = h_max;
  return best_k;
}

}  // namespace

double max_heritability(SnpArchitecture architecture, double maf) {
  const auto shape = shape_of(architecture);
  const auto p = polynomial(shape.subgroups.front().size(), shape.additive, carrier_probability(maf));
  double h = 0.0;
  best_prevalence(p, &h);
  return h;
}

PenetranceModel penetrance_model(SnpArchitecture architecture, double heritability, double maf) {
  if (!(heritability > 0.0 && heritability <= 1.0))
    fail(ErrorKind::invalid_argument, "heritability must lie in (0, 1]");
  require(maf > 0.0 && maf < 1.0, "minor allele frequency must lie in (0, 1)");
  const auto shape = shape_of(architecture);
  PenetranceModel m;
  m.subgroups = shape.subgroups;
  m.additive = shape.additive;
  m.pi = carrier_probability(maf);
  const auto p = polynomial(shape.subgroups.front().size(), shape.additive, m.pi);
  double h_max = 0.0;
  m.prevalence = best_prevalence(p, &h_max);
  if (heritability > h_max + 1e-12)
    fail(ErrorKind::invalid_argument, std::string("heritability ") + format_double(heritability) + " exceeds the maximum " +
                                          format_double(h_max) + " for architecture " + to_string(architecture));
  m.b = std::sqrt(std::min(heritability, h_max) * m.prevalence * (1.0 - m.prevalence) / p.variance);
  return m;
}

Dataset gen_snp(const SnpSpec& spec) {
  const auto model = penetrance_model(spec.architecture, spec.heritability, spec.relevant_maf);
  const std::size_t n_relevant = relevant_feature_count(spec.architecture);
  require(spec.n_features >= n_relevant, "gen_snp: fewer features than relevant loci");
  require(spec.n_instances >= 2, "gen_snp: need at least two instances");
  require(spec.noise_maf_lo > 0 && spec.noise_maf_lo <= spec.noise_maf_hi && spec.noise_maf_hi <= 0.5,
          "gen_snp: noise MAF range must lie in (0, 0.5]");
  const std::size_t n_noise = spec.n_features - n_relevant;

  Rng rng(derive_seed(spec.seed, {"snp", to_string(spec.architecture)}));
  std::vector<double> noise_maf(n_noise);
  for (auto& m : noise_maf) m = rng.uniform(spec.noise_maf_lo, spec.noise_maf_hi);

  Dataset d;
  d.name = std::string("snp_") + to_string(spec.architecture);
  for (std::size_t j = 0; j < n_noise; ++j) d.features.push_back({"N" + std::to_string(j), FeatureKind::categorical});
  for (std::size_t g = 0; g < model.subgroups.size(); ++g)
    for (std::size_t p = 0; p < model.subgroups[g].size(); ++p)
      d.features.push_back({"M" + std::to_string(g) + "P" + std::to_string(p), FeatureKind::categorical});

  const std::size_t want_cases = (spec.n_instances + 1) / 2, want_controls = spec.n_instances / 2;
  std::size_t cases = 0, controls = 0;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  const std::size_t max_draws = 1000 * spec.n_instances;
  std::vector<double> row(spec.n_features);
  for (std::size_t draw = 0; cases < want_cases || controls < want_controls; ++draw) {
    if (draw >= max_draws)
      fail(ErrorKind::invalid_argument, "gen_snp: could not balance classes within the draw budget");
    for (std::size_t j = 0; j < n_noise; ++j) row[j] = hwe_genotype(noise_maf[j], rng);
    for (std::size_t j = 0; j < n_relevant; ++j) row[n_noise + j] = hwe_genotype(spec.relevant_maf, rng);
    // Heterogeneous architectures: a hidden, uniformly drawn subgroup picks
    // which loci drive this instance.
    const std::size_t group = model.subgroups.size() > 1 ? rng.below(model.subgroups.size()) : 0;
    std::vector<int> genotypes;
    for (auto idx : model.subgroups[group]) genotypes.push_back(static_cast<int>(row[n_noise + idx]));
    const int label = rng.bernoulli(model.penetrance(genotypes)) ? 1 : 0;
    if (label == 1 && cases >= want_cases) continue;
    if (label == 0 && controls >= want_controls) continue;
    (label ? cases : controls) += 1;
    rows.push_back(row);
    labels.push_back(label);
  }
  d.values = Matrix(rows.size(), spec.n_features);
  d.missing.assign(rows.size() * spec.n_features, 0);
  d.outcome = labels;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < spec.n_features; ++j) d.values(i, j) = rows[i][j];
  d.features = infer_feature_types(d, 2, d.feature_names());
  return d;
}

nlohmann::json simulation_metadata(const MuxSpec& spec) {
  const int k = mux_address_bits(spec.total_bits);
  return {{"generator", "mux"},
          {"total_bits", spec.total_bits},
          {"address_bits", k},
          {"register_bits", 1 << k},
          {"n_instances", spec.n_instances},
          {"seed", spec.seed},
          {"address_bit_order", "most significant first (A0 is the high bit)"}};
}

nlohmann::json simulation_metadata(const SnpSpec& spec) {
  const auto model = penetrance_model(spec.architecture, spec.heritability, spec.relevant_maf);
  return {{"generator", "snp"},
          {"architecture", to_string(spec.architecture)},
          {"n_features", spec.n_features},
          {"relevant_features", relevant_feature_count(spec.architecture)},
          {"n_instances", spec.n_instances},
          {"relevant_maf", spec.relevant_maf},
          {"noise_maf_range", {spec.noise_maf_lo, spec.noise_maf_hi}},
          {"heritability", spec.heritability},
          {"max_heritability", max_heritability(spec.architecture, spec.relevant_maf)},
          {"prevalence", model.prevalence},
          {"seed", spec.seed},
          {"heritability_definition",
           "declared stand-in: penetrance = K + b * f(dominant carrier indicators), "
           "h = Var(penetrance) / (K (1 - K)); not the GAMETES model search"},
          {"subgroups", "hidden, uniform assignment per instance (heterogeneous architectures)"}};
}

}  // namespace tabml
