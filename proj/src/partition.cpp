#include "tabml/partition.hpp"

#include <algorithm>
#include <map>

#include "tabml/log.hpp"

namespace tabml {

const char* to_string(CvStrategy strategy) {
  switch (strategy) {
    case CvStrategy::stratified: return "stratified";
    case CvStrategy::random: return "random";
    case CvStrategy::matched: return "matched";
  }
  return "stratified";
}

CvStrategy cv_strategy_from_string(std::string_view text) {
  if (text == "stratified") return CvStrategy::stratified;
  if (text == "random") return CvStrategy::random;
  if (text == "matched") return CvStrategy::matched;
  fail(ErrorKind::config, "unknown CV strategy: " + std::string(text));
}

namespace {

std::vector<int> deal_round_robin(const std::vector<std::size_t>& order, int k, std::size_t n) {
  std::vector<int> fold_of(n, -1);
  for (std::size_t p = 0; p < order.size(); ++p) fold_of[order[p]] = static_cast<int>(p % static_cast<std::size_t>(k));
  return fold_of;
}

std::vector<int> matched_assignment(const Dataset& data, int k, Rng& rng) {
  const std::size_t n = data.n_instances();
  std::map<long long, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[data.match_group[i]].push_back(i);
  if (groups.size() < static_cast<std::size_t>(k))
    fail(ErrorKind::invalid_argument, "matched CV needs at least k=" + std::to_string(k) + " match groups, found " +
                                          std::to_string(groups.size()));

  const std::size_t limit = 2 * ((n + static_cast<std::size_t>(k) - 1) / static_cast<std::size_t>(k));
  std::vector<std::vector<std::size_t>> strata(2);
  std::vector<std::vector<std::size_t>> members;
  for (auto& [id, rows] : groups) {
    if (rows.size() > limit)
      warn("match group " + std::to_string(id) + " has " + std::to_string(rows.size()) +
           " instances, more than twice the fold size");
    std::size_t pos = 0;
    for (auto r : rows) pos += data.outcome[r] == 1;
    const int majority = 2 * pos > rows.size() ? 1 : 0;
    strata[static_cast<std::size_t>(majority)].push_back(members.size());
    members.push_back(rows);
  }

  std::vector<int> fold_of(n, -1);
  std::vector<std::size_t> fold_size(static_cast<std::size_t>(k), 0);
  for (int s = 0; s < 2; ++s) {
    auto& order = strata[static_cast<std::size_t>(s)];
    rng.shuffle(order);
    // Larger groups first so the greedy fill stays balanced.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return members[a].size() > members[b].size(); });
    std::vector<std::size_t> stratum_count(static_cast<std::size_t>(k), 0);
    for (auto g : order) {
      std::size_t best = 0;
      for (std::size_t f = 1; f < fold_size.size(); ++f) {
        if (std::pair(stratum_count[f], fold_size[f]) < std::pair(stratum_count[best], fold_size[best])) best = f;
      }
      for (auto r : members[g]) fold_of[r] = static_cast<int>(best);
      stratum_count[best] += members[g].size();
      fold_size[best] += members[g].size();
    }
  }
  return fold_of;
}

}  // namespace

CvSplit make_cv(const Dataset& data, int k, CvStrategy strategy, std::uint64_t seed) {
  const std::size_t n = data.n_instances();
  require(k >= 2, "make_cv: k must be at least 2");
  require(static_cast<std::size_t>(k) <= n, "make_cv: k exceeds the number of instances");
  Rng rng(derive_seed(seed, {"cv", to_string(strategy)}));

  std::vector<int> fold_of;
  switch (strategy) {
    case CvStrategy::random: {
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      rng.shuffle(order);
      fold_of = deal_round_robin(order, k, n);
      break;
    }
    case CvStrategy::stratified: {
      std::vector<std::size_t> by_class[2];
      for (std::size_t i = 0; i < n; ++i) {
        const int y = data.outcome[i];
        require(y == 0 || y == 1, "make_cv: dataset has missing outcomes; clean it first");
        by_class[y].push_back(i);
      }
      for (int c = 0; c < 2; ++c) {
        if (by_class[c].size() < static_cast<std::size_t>(k))
          fail(ErrorKind::invalid_argument, "stratified CV: class " + std::to_string(c) + " has only " +
                                                std::to_string(by_class[c].size()) + " instances, fewer than k=" +
                                                std::to_string(k));
      }
      std::vector<std::size_t> order;
      for (auto& cls : by_class) {
        rng.shuffle(cls);
        order.insert(order.end(), cls.begin(), cls.end());
      }
      fold_of = deal_round_robin(order, k, n);
      break;
    }
    case CvStrategy::matched:
      require(data.match_group.size() == n, "matched CV requires a match group column");
      fold_of = matched_assignment(data, k, rng);
      break;
  }

  CvSplit split;
  split.k = k;
  split.strategy = strategy;
  split.seed = seed;
  split.folds.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    for (int f = 0; f < k; ++f) {
      auto& fold = split.folds[static_cast<std::size_t>(f)];
      (fold_of[i] == f ? fold.test : fold.train).push_back(i);
    }
  }
  return split;
}

nlohmann::json to_json(const CvSplit& split) {
  nlohmann::json j;
  j["k"] = split.k;
  j["strategy"] = to_string(split.strategy);
  j["seed"] = split.seed;
  j["folds"] = nlohmann::json::array();
  for (const auto& f : split.folds) j["folds"].push_back({{"train", f.train}, {"test", f.test}});
  return j;
}

CvSplit cv_split_from_json(const nlohmann::json& j) {
  CvSplit split;
  split.k = j.at("k").get<int>();
  split.strategy = cv_strategy_from_string(j.at("strategy").get<std::string>());
  split.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& f : j.at("folds")) {
    split.folds.push_back(
        {f.at("train").get<std::vector<std::size_t>>(), f.at("test").get<std::vector<std::size_t>>()});
  }
  return split;
}

}  // namespace tabml
