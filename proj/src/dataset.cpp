#include "tabml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "tabml/log.hpp"

namespace tabml {

const char* to_string(FeatureKind kind) {
  return kind == FeatureKind::categorical ? "categorical" : "quantitative";
}

FeatureKind feature_kind_from_string(std::string_view text) {
  if (text == "categorical") return FeatureKind::categorical;
  if (text == "quantitative") return FeatureKind::quantitative;
  fail(ErrorKind::parse, "unknown feature kind: " + std::string(text));
}

std::optional<std::size_t> Dataset::feature_index(std::string_view name) const {
  for (std::size_t j = 0; j < features.size(); ++j)
    if (features[j].name == name) return j;
  return std::nullopt;
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.name);
  return out;
}

std::vector<FeatureKind> Dataset::feature_kinds() const {
  std::vector<FeatureKind> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.kind);
  return out;
}

std::size_t Dataset::missing_count() const {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), std::uint8_t{1}));
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.name = name;
  out.features = features;
  out.scaled = scaled;
  out.values = values.select_rows(rows);
  const std::size_t f = features.size();
  out.missing.resize(rows.size() * f);
  out.outcome.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(missing.begin() + static_cast<std::ptrdiff_t>(rows[i] * f), f,
                out.missing.begin() + static_cast<std::ptrdiff_t>(i * f));
    out.outcome[i] = outcome[rows[i]];
  }
  if (!instance_ids.empty()) {
    out.instance_ids.reserve(rows.size());
    for (auto r : rows) out.instance_ids.push_back(instance_ids[r]);
  }
  if (!match_group.empty()) {
    out.match_group.reserve(rows.size());
    for (auto r : rows) out.match_group.push_back(match_group[r]);
  }
  return out;
}

Dataset Dataset::select_features(const std::vector<std::string>& names) const {
  std::vector<std::size_t> cols;
  std::vector<std::string> absent;
  for (const auto& n : names) {
    if (auto j = feature_index(n)) cols.push_back(*j);
    else absent.push_back(n);
  }
  if (!absent.empty()) fail(ErrorKind::invalid_argument, "features not present in data: " + join(absent, ", "));
  Dataset out;
  out.name = name;
  out.scaled = scaled;
  for (auto j : cols) out.features.push_back(features[j]);
  out.values = values.select_cols(cols);
  const std::size_t n = n_instances();
  out.missing.resize(n * cols.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < cols.size(); ++k) out.missing[i * cols.size() + k] = missing[i * features.size() + cols[k]];
  out.outcome = outcome;
  out.instance_ids = instance_ids;
  out.match_group = match_group;
  return out;
}

void Dataset::set_cell(std::size_t row, std::size_t col, double value) {
  values(row, col) = value;
  missing[row * features.size() + col] = std::isnan(value) ? 1 : 0;
}

void Dataset::validate() const {
  const std::size_t n = outcome.size();
  const std::size_t f = features.size();
  if (values.rows() != n || (n > 0 && values.cols() != f))
    fail(ErrorKind::internal, "dataset: value table shape does not match outcome/features");
  if (missing.size() != n * f) fail(ErrorKind::internal, "dataset: missing mask has wrong size");
  for (std::size_t i = 0; i < n; ++i) {
    if (outcome[i] != 0 && outcome[i] != 1 && outcome[i] != -1)
      fail(ErrorKind::internal, "dataset: outcome must be 0, 1 or missing");
    for (std::size_t j = 0; j < f; ++j) {
      const double v = values(i, j);
      const bool flagged = missing[i * f + j] != 0;
      if (flagged != std::isnan(v) || (!flagged && !std::isfinite(v)))
        fail(ErrorKind::internal, "dataset: missing mask inconsistent at row " + std::to_string(i));
    }
  }
  if (!instance_ids.empty() && instance_ids.size() != n) fail(ErrorKind::internal, "dataset: id column length");
  if (!match_group.empty() && match_group.size() != n) fail(ErrorKind::internal, "dataset: match column length");
}

bool Dataset::operator==(const Dataset& other) const {
  if (features.size() != other.features.size()) return false;
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (features[j].name != other.features[j].name || features[j].kind != other.features[j].kind) return false;
  }
  return values == other.values && missing == other.missing && outcome == other.outcome &&
         instance_ids == other.instance_ids && match_group == other.match_group && scaled == other.scaled;
}


Dataset parse_csv(std::string_view text, const DatasetConfig& config, std::string name) {
  const auto records = parse_csv_records(text);
  if (records.empty()) fail(ErrorKind::parse, "CSV has no header row");
  const auto& header = records.front();

  std::unordered_set<std::string> seen;
  for (const auto& h : header) {
    if (!seen.insert(h).second) fail(ErrorKind::config, "duplicate column name in header: " + h);
  }
  if (config.outcome.empty() || !seen.count(config.outcome))
    fail(ErrorKind::config, "outcome column '" + config.outcome + "' not found in header");
  if (!config.instance_id.empty() && !seen.count(config.instance_id))
    fail(ErrorKind::config, "instance ID column '" + config.instance_id + "' not found in header");
  if (!config.match_group.empty() && !seen.count(config.match_group))
    fail(ErrorKind::config, "match group column '" + config.match_group + "' not found in header");

  Dataset data;
  data.name = std::move(name);
  std::vector<std::size_t> feature_cols;
  std::size_t outcome_col = 0, id_col = header.size(), match_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == config.outcome) outcome_col = c;
    else if (!config.instance_id.empty() && header[c] == config.instance_id) id_col = c;
    else if (!config.match_group.empty() && header[c] == config.match_group) match_col = c;
    else {
      feature_cols.push_back(c);
      FeatureMeta meta;
      meta.name = header[c];
      data.features.push_back(meta);
    }
  }

  const std::size_t n = records.size() - 1;
  const std::size_t f = feature_cols.size();
  data.values = Matrix(n, f);
  data.missing.assign(n * f, 0);
  data.outcome.assign(n, -1);
  if (id_col < header.size()) data.instance_ids.resize(n);
  if (match_col < header.size()) data.match_group.resize(n);

  auto is_missing_token = [&](const std::string& cell) {
    return cell.empty() || cell == config.missing_token || trim(cell).empty();
  };
  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + 1];
    const std::size_t line = r + 2;
    if (rec.size() != header.size())
      fail(ErrorKind::parse, "row " + std::to_string(line) + ": expected " + std::to_string(header.size()) +
                                 " fields, found " + std::to_string(rec.size()));
    for (std::size_t k = 0; k < f; ++k) {
      const std::string& cell = rec[feature_cols[k]];
      if (is_missing_token(cell)) {
        data.values(r, k) = kNaN;
        data.missing[r * f + k] = 1;
        continue;
      }
      bool ok = false;
      const double v = parse_double(cell, &ok);
      if (!ok || !std::isfinite(v))
        fail(ErrorKind::parse, "row " + std::to_string(line) + ", column '" + header[feature_cols[k]] +
                                   "': non-numeric value '" + cell + "'");
      data.values(r, k) = v;
    }
    const std::string& y = rec[outcome_col];
    if (!is_missing_token(y)) {
      bool ok = false;
      const double v = parse_double(y, &ok);
      if (!ok || (v != 0.0 && v != 1.0))
        fail(ErrorKind::parse, "row " + std::to_string(line) + ", outcome column '" + config.outcome +
                                   "': expected 0 or 1, found '" + y + "'");
      data.outcome[r] = static_cast<int>(v);
    }
    if (id_col < header.size()) data.instance_ids[r] = rec[id_col];
    if (match_col < header.size()) {
      bool ok = false;
      const double g = parse_double(rec[match_col], &ok);
      if (!ok || g != std::floor(g))
        fail(ErrorKind::parse, "row " + std::to_string(line) + ", match column '" + config.match_group +
                                   "': expected an integer group id, found '" + rec[match_col] + "'");
      data.match_group[r] = static_cast<long long>(g);
    }
  }
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const DatasetConfig& config) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::io, "data file does not exist: " + path.string());
  return parse_csv(read_file(path), config, path.stem().string());
}

std::string to_csv(const Dataset& data, const DatasetConfig& config) {
  std::string out;
  std::vector<std::string> header;
  if (!data.instance_ids.empty()) header.push_back(config.instance_id.empty() ? "InstanceID" : config.instance_id);
  if (!data.match_group.empty()) header.push_back(config.match_group.empty() ? "MatchGroup" : config.match_group);
  for (const auto& f : data.features) header.push_back(f.name);
  header.push_back(config.outcome);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += csv_field(header[i]);
  }
  out += '\n';
  for (std::size_t r = 0; r < data.n_instances(); ++r) {
    if (!data.instance_ids.empty()) {
      out += csv_field(data.instance_ids[r]);
      out += ',';
    }
    if (!data.match_group.empty()) {
      out += std::to_string(data.match_group[r]);
      out += ',';
    }
    for (std::size_t j = 0; j < data.n_features(); ++j) {
      out += data.is_missing(r, j) ? csv_field(config.missing_token) : format_double(data.values(r, j));
      out += ',';
    }
    out += data.outcome[r] < 0 ? csv_field(config.missing_token) : std::to_string(data.outcome[r]);
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& data, const DatasetConfig& config, const std::filesystem::path& path) {
  write_file_atomic(path, to_csv(data, config));
}

std::vector<FeatureMeta> infer_feature_types(const Dataset& data, int cutoff,
                                             const std::vector<std::string>& categorical,
                                             const std::vector<std::string>& quantitative) {
  require(cutoff >= 2, "infer_feature_types: cutoff must be >= 2");
  for (const auto* list : {&categorical, &quantitative}) {
    for (const auto& name : *list)
      if (!data.feature_index(name))
        fail(ErrorKind::config, "feature type override names a nonexistent feature: " + name);
  }
  auto listed = [](const std::vector<std::string>& list, const std::string& name) {
    return std::find(list.begin(), list.end(), name) != list.end();
  };
  std::vector<FeatureMeta> out = data.features;
  for (std::size_t j = 0; j < out.size(); ++j) {
    std::set<double> unique;
    double lo = kInf, hi = -kInf;
    for (std::size_t i = 0; i < data.n_instances(); ++i) {
      if (data.is_missing(i, j)) continue;
      const double v = data.values(i, j);
      unique.insert(v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    auto& meta = out[j];
    meta.observed_unique_count = unique.size();
    if (listed(categorical, meta.name)) meta.kind = FeatureKind::categorical;
    else if (listed(quantitative, meta.name)) meta.kind = FeatureKind::quantitative;
    else meta.kind = unique.size() <= static_cast<std::size_t>(cutoff) ? FeatureKind::categorical : FeatureKind::quantitative;
    if (meta.kind == FeatureKind::quantitative && !unique.empty()) {
      meta.observed_min = lo;
      meta.observed_max = hi;
    } else {
      meta.observed_min = kNaN;
      meta.observed_max = kNaN;
    }
  }
  return out;
}

Dataset with_feature_types(Dataset data, int cutoff, const std::vector<std::string>& categorical,
                           const std::vector<std::string>& quantitative) {
  data.features = infer_feature_types(data, cutoff, categorical, quantitative);
  return data;
}

Dataset clean(const Dataset& data, const std::vector<std::string>& excluded_features) {
  std::vector<std::string> keep;
  for (const auto& f : data.features)
    if (std::find(excluded_features.begin(), excluded_features.end(), f.name) == excluded_features.end())
      keep.push_back(f.name);
  for (const auto& name : excluded_features)
    if (!data.feature_index(name)) warn("excluded feature not present in dataset '" + data.name + "': " + name);

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.n_instances(); ++i)
    if (data.outcome[i] == 0 || data.outcome[i] == 1) rows.push_back(i);

  Dataset out = data.select_features(keep).select_rows(rows);
  if (out.n_instances() == 0) warn("dataset '" + data.name + "' has no instances after cleaning");
  return out;
}

EdaSummary eda_summary(const Dataset& data) {
  EdaSummary s;
  const std::size_t n = data.n_instances();
  const std::size_t f = data.n_features();
  s.feature_count = f;
  s.instance_count = n;
  s.missing_cell_count = data.missing_count();
  for (int y : data.outcome) {
    if (y == 0) ++s.class_counts.first;
    else if (y == 1) ++s.class_counts.second;
  }
  require(s.class_counts.first + s.class_counts.second == n, "eda_summary: dataset must be cleaned first");

  std::vector<std::vector<double>> columns(f);
  for (std::size_t j = 0; j < f; ++j) columns[j] = data.values.column(j);

  s.feature_correlations = Matrix(f, f, 0.0);
  for (std::size_t a = 0; a < f; ++a) {
    s.feature_correlations(a, a) = 1.0;
    for (std::size_t b = a + 1; b < f; ++b) {
      std::vector<double> x, y;
      for (std::size_t i = 0; i < n; ++i) {
        if (data.is_missing(i, a) || data.is_missing(i, b)) continue;
        x.push_back(columns[a][i]);
        y.push_back(columns[b][i]);
      }
      const auto ka = data.features[a].kind;
      const auto kb = data.features[b].kind;
      double r = kNaN;
      if (x.size() >= 2) {
        if (ka == FeatureKind::quantitative && kb == FeatureKind::quantitative) {
          r = stats::spearman(x, y);
        } else if (ka == FeatureKind::categorical && kb == FeatureKind::categorical) {
          r = stats::cramers_v(x, y);
        } else {
          const auto& cat = ka == FeatureKind::categorical ? x : y;
          const auto& quant = ka == FeatureKind::categorical ? y : x;
          r = stats::rank_biserial(cat, quant);
          if (std::isnan(r) && std::set<double>(cat.begin(), cat.end()).size() > 2) r = stats::spearman(cat, quant);
        }
      }
      if (std::isnan(r)) {
        s.undefined_correlations.emplace_back(a, b);
        r = 0.0;
      }
      s.feature_correlations(a, b) = r;
      s.feature_correlations(b, a) = r;
    }
  }

  for (std::size_t j = 0; j < f; ++j) {
    UnivariateResult u;
    u.feature = data.features[j].name;
    std::vector<double> x;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      if (data.is_missing(i, j)) continue;
      x.push_back(columns[j][i]);
      y.push_back(data.outcome[i]);
    }
    if (data.features[j].kind == FeatureKind::categorical) {
      u.test_name = "chi_square";
      const auto r = stats::chi_square_independence(x, y);
      u.statistic = r.statistic;
      u.p_value = r.p_value;
    } else {
      u.test_name = "mann_whitney_u";
      std::vector<double> neg, pos;
      for (std::size_t i = 0; i < x.size(); ++i) (y[i] == 1 ? pos : neg).push_back(x[i]);
      if (!neg.empty() && !pos.empty()) {
        const auto r = stats::mann_whitney_u(pos, neg);
        u.statistic = r.statistic;
        u.p_value = r.p_value;
      }
    }
    s.univariate_results.push_back(u);
  }
  return s;
}

}  // namespace tabml
