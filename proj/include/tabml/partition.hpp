#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabml/dataset.hpp"

namespace tabml {

enum class CvStrategy { stratified, random, matched };

const char* to_string(CvStrategy strategy);
CvStrategy cv_strategy_from_string(std::string_view text);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  bool operator==(const Fold&) const = default;
};

struct CvSplit {
  int k = 0;
  CvStrategy strategy = CvStrategy::stratified;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;

  bool operator==(const CvSplit&) const = default;
};

/// Deterministic for a fixed (row order, k, strategy, seed). Fold sizes
/// differ by at most one, the first n mod k folds being the larger ones
/// (matched folds are balanced greedily at group granularity instead).
CvSplit make_cv(const Dataset& data, int k, CvStrategy strategy, std::uint64_t seed);

nlohmann::json to_json(const CvSplit& split);
CvSplit cv_split_from_json(const nlohmann::json& j);

}  // namespace tabml
