#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tabml/common.hpp"
#include "tabml/stats.hpp"

namespace tabml {

enum class FeatureKind { categorical, quantitative };

const char* to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view text);

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::quantitative;
  std::size_t observed_unique_count = 0;
  /// Quantitative features only; NaN otherwise.
  double observed_min = kNaN;
  double observed_max = kNaN;
};

/// How to read a CSV file into a Dataset.
struct DatasetConfig {
  std::string outcome = "Class";
  std::string instance_id;  // optional column
  std::string match_group;  // optional column
  std::string missing_token = "NA";
};

/// Tabular binary-outcome data. Cells are row-major; a missing cell holds
/// NaN and has its mask byte set, a present cell is finite with mask 0.
/// Outcome is 0/1, or -1 for a missing outcome before cleaning.
struct Dataset {
  std::string name;
  std::vector<FeatureMeta> features;
  Matrix values;
  std::vector<std::uint8_t> missing;
  std::vector<int> outcome;
  std::vector<std::string> instance_ids;
  std::vector<long long> match_group;
  /// Set once a scaler has been applied; guards against double scaling.
  bool scaled = false;

  std::size_t n_instances() const noexcept { return outcome.size(); }
  std::size_t n_features() const noexcept { return features.size(); }
  bool is_missing(std::size_t row, std::size_t col) const { return missing[row * features.size() + col] != 0; }
  std::optional<std::size_t> feature_index(std::string_view name) const;
  std::vector<std::string> feature_names() const;
  std::vector<FeatureKind> feature_kinds() const;
  std::size_t missing_count() const;

  /// Subset of rows, in the given order.
  Dataset select_rows(std::span<const std::size_t> rows) const;
  /// Subset of columns by name, in the given order. Throws listing any
  /// names that are not present.
  Dataset select_features(const std::vector<std::string>& names) const;

  void set_cell(std::size_t row, std::size_t col, double value);
  /// Throws if any documented invariant does not hold.
  void validate() const;

  bool operator==(const Dataset& other) const;
};

Dataset parse_csv(std::string_view text, const DatasetConfig& config, std::string name = "data");
Dataset load_csv(const std::filesystem::path& path, const DatasetConfig& config);
/// Inverse of parse_csv: same column layout, shortest round-trip numbers.
std::string to_csv(const Dataset& data, const DatasetConfig& config);
void write_csv(const Dataset& data, const DatasetConfig& config, const std::filesystem::path& path);

/// Categorical iff listed in `categorical`, else quantitative iff listed in
/// `quantitative`, else by unique count <= cutoff. Also fills observed
/// counts and ranges.
std::vector<FeatureMeta> infer_feature_types(const Dataset& data, int cutoff,
                                             const std::vector<std::string>& categorical = {},
                                             const std::vector<std::string>& quantitative = {});
Dataset with_feature_types(Dataset data, int cutoff, const std::vector<std::string>& categorical = {},
                           const std::vector<std::string>& quantitative = {});

/// Drops instances with a missing outcome and the excluded feature columns.
/// No other rows are touched.
Dataset clean(const Dataset& data, const std::vector<std::string>& excluded_features = {});

struct UnivariateResult {
  std::string feature;
  std::string test_name;
  double statistic = 0.0;
  double p_value = 1.0;
};

struct EdaSummary {
  std::size_t feature_count = 0;
  std::size_t instance_count = 0;
  std::size_t missing_cell_count = 0;
  /// (class 0, class 1)
  std::pair<std::size_t, std::size_t> class_counts{0, 0};
  Matrix feature_correlations;
  /// Pairs whose coefficient was undefined (constant column) and set to 0.
  std::vector<std::pair<std::size_t, std::size_t>> undefined_correlations;
  std::vector<UnivariateResult> univariate_results;
};

/// Spearman for quantitative pairs, Cramer's V for categorical pairs,
/// rank-biserial for mixed pairs whose categorical side has two levels
/// (Spearman on the codes otherwise). Chi-square test vs outcome for
/// categorical features, Mann-Whitney U for quantitative ones.
EdaSummary eda_summary(const Dataset& data);

}  // namespace tabml
