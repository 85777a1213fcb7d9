#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabml/dataset.hpp"

namespace tabml {

struct MuxSpec {
  int total_bits = 6;
  std::size_t n_instances = 500;
  std::uint64_t seed = 0;
};

/// k with k + 2^k == total_bits; throws for sizes outside {6, 11, 20, 37, 70, 135}.
int mux_address_bits(int total_bits);

/// Uniform random bit rows. Features A0..A(k-1) then R0..R(2^k-1); the label
/// is the register selected by the address bits read most-significant first.
Dataset gen_mux(const MuxSpec& spec);

enum class SnpArchitecture { univariate, additive4, heterogeneous4, epistasis2, het_epistasis2x2, epistasis3 };

const char* to_string(SnpArchitecture a);
SnpArchitecture snp_architecture_from_string(std::string_view text);

struct SnpSpec {
  SnpArchitecture architecture = SnpArchitecture::univariate;
  std::size_t n_features = 100;
  std::size_t n_instances = 1600;
  double relevant_maf = 0.2;
  double noise_maf_lo = 0.05;
  double noise_maf_hi = 0.5;
  double heritability = 0.4;
  std::uint64_t seed = 0;
};

/// Penetrance P(case | genotypes) of one subgroup's loci:
///   K + b * f(c), c_i = [genotype_i >= 1] (dominant coding), pi = P(c_i = 1),
/// with f = prod (c_i - pi) for interaction models and sum (c_i - pi) for
/// additive ones. Every lower-order marginal of a product model equals K.
/// Heritability h = Var(penetrance) / (K (1 - K)).
struct PenetranceModel {
  /// Relevant-feature indices per subgroup; one subgroup unless heterogeneous.
  std::vector<std::vector<std::size_t>> subgroups;
  bool additive = false;
  double pi = 0.0;
  double prevalence = 0.0;
  double b = 0.0;

  double penetrance(const std::vector<int>& genotypes) const;
};

/// Largest heritability any prevalence admits for the architecture.
double max_heritability(SnpArchitecture architecture, double maf);
/// Prevalence maximizing the feasible heritability; b scaled to `heritability`.
PenetranceModel penetrance_model(SnpArchitecture architecture, double heritability, double maf);

std::size_t relevant_feature_count(SnpArchitecture architecture);

/// Hardy-Weinberg genotypes; case/control quotas filled by rejection
/// sampling so classes differ by at most one. Noise features N0.. come
/// first, then relevant features M0P0, M0P1, ... (M = subgroup, P = locus).
Dataset gen_snp(const SnpSpec& spec);

/// Generator settings and conventions for the sidecar metadata file.
nlohmann::json simulation_metadata(const MuxSpec& spec);
nlohmann::json simulation_metadata(const SnpSpec& spec);

}  // namespace tabml
