#include "tabml/featimp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

namespace tabml {

namespace {

std::vector<int> discretize(const std::vector<double>& values, FeatureKind kind, int bins) {
  const std::size_t n = values.size();
  std::vector<int> codes(n);
  if (kind == FeatureKind::categorical) {
    std::map<double, int> levels;
    for (double v : values) levels.emplace(v, 0);
    int next = 0;
    for (auto& [v, code] : levels) code = next++;
    for (std::size_t i = 0; i < n; ++i) codes[i] = levels[values[i]];
    return codes;
  }
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n; ++i) {
    const auto below = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), values[i]) - sorted.begin());
    codes[i] = static_cast<int>(below * static_cast<std::size_t>(bins) / n);
  }
  return codes;
}

}  // namespace

std::vector<double> mutual_info(const Dataset& train, int bins) {
  require(bins >= 2, "mutual_info: need at least two bins");
  require(train.missing_count() == 0, "mutual_info: impute first");
  const std::size_t n = train.n_instances();
  std::vector<double> out(train.n_features(), 0.0);
  if (n == 0) return out;
  const double total = static_cast<double>(n);
  for (std::size_t j = 0; j < train.n_features(); ++j) {
    const auto codes = discretize(train.values.column(j), train.features[j].kind, bins);
    const int levels = *std::max_element(codes.begin(), codes.end()) + 1;
    std::vector<double> joint(static_cast<std::size_t>(levels) * 2, 0.0);
    std::vector<double> px(static_cast<std::size_t>(levels), 0.0);
    double py[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const int y = train.outcome[i];
      joint[static_cast<std::size_t>(codes[i]) * 2 + static_cast<std::size_t>(y)] += 1.0;
      px[static_cast<std::size_t>(codes[i])] += 1.0;
      py[y] += 1.0;
    }
    double mi = 0.0;
    for (std::size_t x = 0; x < px.size(); ++x)
      for (int y = 0; y < 2; ++y) {
        const double c = joint[x * 2 + static_cast<std::size_t>(y)];
        if (c > 0) mi += c / total * std::log(c * total / (px[x] * py[y]));
      }
    out[j] = std::max(0.0, mi);
  }
  return out;
}

std::vector<double> multisurf(const Dataset& train, const MultiSurfOptions& options, std::size_t* instances_used) {
  require(train.missing_count() == 0, "multisurf: impute first");
  const std::size_t n_all = train.n_instances();
  const std::size_t f = train.n_features();
  require(n_all >= 3, "multisurf: needs at least 3 instances");
  require(options.instance_cap >= 3, "multisurf: instance cap must be at least 3");

  std::vector<std::size_t> rows(n_all);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (n_all > options.instance_cap) {
    Rng rng(options.seed);
    rng.shuffle(rows);
    rows.resize(options.instance_cap);
    std::sort(rows.begin(), rows.end());
  }
  const std::size_t n = rows.size();
  if (instances_used) *instances_used = n;

  // Feature-major copy of the scored rows.
  std::vector<double> x(f * n);
  std::vector<int> y(n);
  std::vector<double> range(f, 0.0);
  std::vector<char> categorical(f);
  for (std::size_t j = 0; j < f; ++j) {
    categorical[j] = train.features[j].kind == FeatureKind::categorical;
    double lo = kInf, hi = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = train.values(rows[i], j);
      x[j * n + i] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    range[j] = hi - lo;
  }
  for (std::size_t i = 0; i < n; ++i) y[i] = train.outcome[rows[i]];

  auto diff = [&](std::size_t j, std::size_t a, std::size_t b) {
    const double va = x[j * n + a];
    const double vb = x[j * n + b];
    if (categorical[j]) return va != vb ? 1.0 : 0.0;
    return range[j] > 0.0 ? std::abs(va - vb) / range[j] : 0.0;
  };

  // Symmetric distance matrix, each entry summed over features in order.
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      double d = 0.0;
      for (std::size_t j = 0; j < f; ++j) d += diff(j, a, b);
      dist[a * n + b] = d;
      dist[b * n + a] = d;
    }

  std::vector<double> scores(f, 0.0);
  const double others = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double* di = &dist[i * n];
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum += di[j];
    const double mu = sum / others;
    double ss = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) ss += (di[j] - mu) * (di[j] - mu);
    const double threshold = mu - std::sqrt(ss / others) / 2.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !(di[j] < threshold)) continue;
      if (y[i] == y[j]) {
        for (std::size_t k = 0; k < f; ++k) scores[k] -= diff(k, i, j);
      } else {
        for (std::size_t k = 0; k < f; ++k) scores[k] += diff(k, i, j);
      }
    }
  }
  for (auto& s : scores) s /= static_cast<double>(n);
  return scores;
}

TurfResult turf(const Dataset& train, const ReliefFn& relief, double pct_removed, int iterations) {
  require(iterations >= 1, "turf: iterations must be at least 1");
  require(pct_removed > 0.0 && pct_removed < 1.0, "turf: removal fraction must be in (0, 1)");
  const std::size_t f = train.n_features();
  TurfResult result;
  result.scores.assign(f, 0.0);
  result.rounds_survived.assign(f, 0);
  std::vector<std::size_t> alive(f);
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> removed_by_round;
  const auto all_names = train.feature_names();

  for (int round = 0; round < iterations && !alive.empty(); ++round) {
    std::vector<std::string> names;
    for (auto j : alive) names.push_back(all_names[j]);
    const auto scores = relief(train.select_features(names));
    require(scores.size() == alive.size(), "turf: relief function returned the wrong number of scores");
    for (std::size_t k = 0; k < alive.size(); ++k) {
      result.scores[alive[k]] = scores[k];
      ++result.rounds_survived[alive[k]];
    }
    if (round + 1 == iterations) break;
    const auto order = rank_descending(scores, names);
    std::size_t drop = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(pct_removed * static_cast<double>(alive.size()))));
    drop = std::min(drop, alive.size() - 1);
    if (drop == 0) break;
    std::vector<std::size_t> keep, gone;
    for (std::size_t r = 0; r < order.size(); ++r) (r < order.size() - drop ? keep : gone).push_back(alive[order[r]]);
    std::sort(keep.begin(), keep.end());
    removed_by_round.push_back(gone);
    alive = keep;
  }

  auto by_score = [&](std::vector<std::size_t> idx) {
    std::vector<double> s;
    std::vector<std::string> n;
    for (auto j : idx) {
      s.push_back(result.scores[j]);
      n.push_back(all_names[j]);
    }
    std::vector<std::size_t> out;
    for (auto r : rank_descending(s, n)) out.push_back(idx[r]);
    return out;
  };
  result.ranking = by_score(alive);
  for (auto it = removed_by_round.rbegin(); it != removed_by_round.rend(); ++it) {
    const auto part = by_score(*it);
    result.ranking.insert(result.ranking.end(), part.begin(), part.end());
  }
  return result;
}

int turf_default_iterations(std::size_t features, std::size_t target) {
  require(target >= 1, "turf: target must be at least 1");
  if (features <= target) return 1;
  const int it = static_cast<int>(std::ceil(std::log2(static_cast<double>(features) / static_cast<double>(target))));
  return std::clamp(it, 1, 10);
}

std::vector<std::string> collective_select(const std::vector<std::string>& names, const std::vector<double>& mi,
                                           const std::vector<double>& ms, std::optional<std::size_t> max_features) {
  require(mi.size() == names.size() && ms.size() == names.size(), "collective_select: score vectors must match features");
  if (max_features) require(*max_features >= 1, "collective_select: max_features must be at least 1");
  std::vector<std::size_t> pool;
  for (std::size_t j = 0; j < names.size(); ++j)
    if (mi[j] > 0.0 || ms[j] > 0.0) pool.push_back(j);

  std::vector<std::string> out;
  if (!max_features) {
    for (auto j : pool) out.push_back(names[j]);
    return out;
  }
  auto ordered = [&](const std::vector<double>& score) {
    std::vector<double> s;
    std::vector<std::string> n;
    for (auto j : pool) {
      s.push_back(score[j]);
      n.push_back(names[j]);
    }
    std::vector<std::size_t> idx;
    for (auto r : rank_descending(s, n)) idx.push_back(pool[r]);
    return idx;
  };
  const auto lists = std::array{ordered(mi), ordered(ms)};
  std::array<std::size_t, 2> cursor{0, 0};
  std::vector<char> taken(names.size(), 0);
  const std::size_t limit = std::min(*max_features, pool.size());
  for (int turn = 0; out.size() < limit; turn ^= 1) {
    const auto& list = lists[static_cast<std::size_t>(turn)];
    auto& c = cursor[static_cast<std::size_t>(turn)];
    while (c < list.size() && taken[list[c]]) ++c;
    if (c == list.size()) continue;
    taken[list[c]] = 1;
    out.push_back(names[list[c]]);
  }
  return out;
}

std::string to_csv(const FeatureScores& scores) {
  std::string out = "feature,mi,multisurf,selected,selection_rank\n";
  for (std::size_t j = 0; j < scores.features.size(); ++j) {
    const auto it = std::find(scores.selected_features.begin(), scores.selected_features.end(), scores.features[j]);
    const bool selected = it != scores.selected_features.end();
    out += csv_field(scores.features[j]) + "," + format_double(scores.mi_scores[j]) + "," +
           format_double(scores.multisurf_scores[j]) + "," + (selected ? "1" : "0") + "," +
           (selected ? std::to_string(it - scores.selected_features.begin() + 1) : "0") + "\n";
  }
  return out;
}

FeatureScores feature_scores_from_csv(std::string_view text, int fold) {
  FeatureScores s;
  s.fold = fold;
  const auto records = parse_csv_records(text);
  std::vector<std::pair<long, std::string>> ranked;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& cells = records[i];
    if (cells.size() != 5) fail(ErrorKind::parse, "feature score CSV: malformed line " + std::to_string(i + 1));
    s.features.push_back(cells[0]);
    s.mi_scores.push_back(parse_double(cells[1]));
    s.multisurf_scores.push_back(parse_double(cells[2]));
    if (cells[3] == "1") ranked.emplace_back(std::stol(cells[4]), cells[0]);
  }
  std::sort(ranked.begin(), ranked.end());
  for (auto& [r, name] : ranked) s.selected_features.push_back(name);
  return s;
}

}  // namespace tabml
