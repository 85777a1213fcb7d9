#include <algorithm>
#include <cmath>

#include "models/learners.hpp"

namespace tabml::learners {
namespace {

enum Op : int { kConst = 0, kVar = 1, kAdd = 2, kSub = 3, kMul = 4, kDiv = 5 };

struct Gene {
  int op = kConst;
  double value = 0.0;  // constant value, or feature index for kVar
};

using Program = std::vector<Gene>;

int arity(int op) { return op >= kAdd ? 2 : 0; }

/// One past the last gene of the subtree rooted at `start` (prefix order).
std::size_t subtree_end(const Program& p, std::size_t start) {
  std::size_t need = 1, k = start;
  while (need > 0) {
    need += static_cast<std::size_t>(arity(p[k].op));
    --need;
    ++k;
  }
  return k;
}

std::size_t depth_of(const Program& p) {
  // Stack of remaining-children counts per open function.
  std::vector<int> open;
  std::size_t depth = 0;
  for (const auto& g : p) {
    depth = std::max(depth, open.size());
    if (arity(g.op) > 0) {
      open.push_back(arity(g.op));
      continue;
    }
    while (!open.empty() && --open.back() == 0) open.pop_back();
  }
  return depth;
}

class GeneticProgramming final : public Classifier {
 public:
  void fit(const Matrix& X, std::span<const int> y, const std::vector<FeatureKind>&, const Hyperparameters& hp,
           std::uint64_t seed, const FitOptions&) override {
    const auto pop_size = static_cast<std::size_t>(get_int(hp, "population_size"));
    const auto generations = get_int(hp, "generations");
    const double p_cross = get_real(hp, "p_crossover");
    const auto tournament = static_cast<std::size_t>(get_int(hp, "tournament_size"));
    const double parsimony = get_real(hp, "parsimony");
    const auto max_depth = static_cast<std::size_t>(get_int(hp, "max_depth"));
    constexpr double p_subtree = 0.01, p_hoist = 0.01, p_point = 0.01, p_point_replace = 0.05;

    n_features_ = X.cols();
    Rng rng(derive_seed(seed, {"gp"}));
    columns_.clear();
    for (std::size_t j = 0; j < X.cols(); ++j) columns_.push_back(X.column(j));
    n_pos_ = n_neg_ = 0;
    for (int v : y) (v ? n_pos_ : n_neg_) += 1;

    std::vector<Program> population(pop_size);
    for (std::size_t k = 0; k < pop_size; ++k) {
      const int depth = 2 + static_cast<int>(rng.below(5));
      population[k] = random_program(rng, depth, rng.bernoulli(0.5));
    }
    std::vector<double> raw(pop_size), penalized(pop_size);
    auto score_all = [&] {
      for (std::size_t k = 0; k < pop_size; ++k) {
        raw[k] = fitness(population[k], y);
        penalized[k] = raw[k] - parsimony * static_cast<double>(population[k].size());
      }
    };
    auto tournament_pick = [&]() -> const Program& {
      std::size_t best = rng.below(pop_size);
      for (std::size_t t = 1; t < tournament; ++t) {
        const std::size_t c = rng.below(pop_size);
        if (penalized[c] > penalized[best] || (penalized[c] == penalized[best] && c < best)) best = c;
      }
      return population[best];
    };
    auto best_index = [&] {
      std::size_t b = 0;
      for (std::size_t k = 1; k < pop_size; ++k)
        if (raw[k] > raw[b] || (raw[k] == raw[b] && population[k].size() < population[b].size())) b = k;
      return b;
    };

    score_all();
    for (long long g = 0; g < generations; ++g) {
      const std::size_t elite = best_index();
      if (raw[elite] >= 1.0) break;
      std::vector<Program> next;
      next.reserve(pop_size);
      next.push_back(population[elite]);
      while (next.size() < pop_size) {
        const double r = rng.uniform();
        Program child = tournament_pick();
        if (r < p_cross) {
          const Program& donor = tournament_pick();
          child = crossover(child, donor, rng);
        } else if (r < p_cross + p_subtree) {
          const Program donor = random_program(rng, 2 + static_cast<int>(rng.below(5)), rng.bernoulli(0.5));
          child = crossover(child, donor, rng);
        } else if (r < p_cross + p_subtree + p_hoist) {
          child = hoist(child, rng);
        } else if (r < p_cross + p_subtree + p_hoist + p_point) {
          point_mutate(child, rng, p_point_replace);
        }
        if (depth_of(child) > max_depth) child = tournament_pick();
        next.push_back(std::move(child));
      }
      population = std::move(next);
      score_all();
    }
    program_ = population[best_index()];
    columns_.clear();
  }

  std::vector<double> predict_proba(const Matrix& X) const override {
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < X.cols(); ++j) cols.push_back(X.column(j));
    auto out = evaluate(program_, cols, X.rows());
    for (auto& v : out) v = std::isfinite(v) ? sigmoid(v) : (v > 0 ? 1.0 : 0.0);
    return out;
  }

  nlohmann::json parameters() const override {
    std::vector<int> ops;
    std::vector<double> values;
    for (const auto& g : program_) ops.push_back(g.op), values.push_back(g.value);
    return {{"ops", ops}, {"values", values}, {"n_features", n_features_}};
  }

  void load_parameters(const nlohmann::json& j) override {
    const auto ops = j.at("ops").get<std::vector<int>>();
    const auto values = j.at("values").get<std::vector<double>>();
    require(ops.size() == values.size() && !ops.empty(), "gp: malformed program");
    program_.clear();
    for (std::size_t k = 0; k < ops.size(); ++k) program_.push_back({ops[k], values[k]});
    n_features_ = j.at("n_features").get<std::size_t>();
  }

  std::string describe(const std::vector<std::string>& names) const override {
    std::size_t pos = 0;
    return infix(names, pos) + "\n";
  }

 private:
  Gene random_terminal(Rng& rng) const {
    const std::size_t t = rng.below(n_features_ + 1);
    if (t == n_features_) return {kConst, rng.uniform(-1.0, 1.0)};
    return {kVar, static_cast<double>(t)};
  }

  Program random_program(Rng& rng, int depth, bool full) const {
    Program p;
    // Prefix construction with an explicit stack of open slots.
    std::vector<int> slots{depth};
    while (!slots.empty()) {
      const int d = slots.back();
      slots.pop_back();
      const double f_share = 4.0 / (4.0 + static_cast<double>(n_features_) + 1.0);
      const bool function = d > 0 && (full || p.empty() || rng.uniform() < f_share);
      if (function) {
        p.push_back({kAdd + static_cast<int>(rng.below(4)), 0.0});
        slots.push_back(d - 1);
        slots.push_back(d - 1);
      } else {
        p.push_back(random_terminal(rng));
      }
    }
    return p;
  }

  static Program crossover(const Program& parent, const Program& donor, Rng& rng) {
    const std::size_t s = rng.below(parent.size());
    const std::size_t e = subtree_end(parent, s);
    const std::size_t ds = rng.below(donor.size());
    const std::size_t de = subtree_end(donor, ds);
    Program child(parent.begin(), parent.begin() + static_cast<std::ptrdiff_t>(s));
    child.insert(child.end(), donor.begin() + static_cast<std::ptrdiff_t>(ds),
                 donor.begin() + static_cast<std::ptrdiff_t>(de));
    child.insert(child.end(), parent.begin() + static_cast<std::ptrdiff_t>(e), parent.end());
    return child;
  }

  static Program hoist(const Program& parent, Rng& rng) {
    const std::size_t s = rng.below(parent.size());
    const std::size_t e = subtree_end(parent, s);
    const Program sub(parent.begin() + static_cast<std::ptrdiff_t>(s), parent.begin() + static_cast<std::ptrdiff_t>(e));
    const std::size_t hs = rng.below(sub.size());
    const std::size_t he = subtree_end(sub, hs);
    Program child(parent.begin(), parent.begin() + static_cast<std::ptrdiff_t>(s));
    child.insert(child.end(), sub.begin() + static_cast<std::ptrdiff_t>(hs), sub.begin() + static_cast<std::ptrdiff_t>(he));
    child.insert(child.end(), parent.begin() + static_cast<std::ptrdiff_t>(e), parent.end());
    return child;
  }

  void point_mutate(Program& p, Rng& rng, double rate) const {
    for (auto& g : p) {
      if (!rng.bernoulli(rate)) continue;
      if (arity(g.op) > 0) g.op = kAdd + static_cast<int>(rng.below(4));
      else g = random_terminal(rng);
    }
  }

  static std::vector<double> evaluate(const Program& p, const std::vector<std::vector<double>>& cols, std::size_t n) {
    std::vector<std::vector<double>> stack;
    for (std::size_t k = p.size(); k-- > 0;) {
      const auto& g = p[k];
      if (g.op == kConst) {
        stack.emplace_back(n, g.value);
      } else if (g.op == kVar) {
        stack.push_back(cols[static_cast<std::size_t>(g.value)]);
      } else {
        auto a = std::move(stack.back());
        stack.pop_back();
        auto& b = stack.back();
        // a is the first operand, b the second.
        for (std::size_t i = 0; i < n; ++i) {
          switch (g.op) {
            case kAdd: a[i] = a[i] + b[i]; break;
            case kSub: a[i] = a[i] - b[i]; break;
            case kMul: a[i] = a[i] * b[i]; break;
            default: a[i] = std::abs(b[i]) > 0.001 ? a[i] / b[i] : 1.0; break;
          }
        }
        b = std::move(a);
      }
    }
    return std::move(stack.back());
  }

  double fitness(const Program& p, std::span<const int> y) const {
    const auto out = evaluate(p, columns_, y.size());
    double tp = 0, tn = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const bool predicted = out[i] > 0.0;
      if (y[i] == 1 && predicted) tp += 1;
      if (y[i] == 0 && !predicted) tn += 1;
    }
    return 0.5 * (tp / n_pos_ + tn / n_neg_);
  }

  std::string infix(const std::vector<std::string>& names, std::size_t& pos) const {
    const auto& g = program_[pos++];
    if (g.op == kConst) return format_double(g.value);
    if (g.op == kVar) return names[static_cast<std::size_t>(g.value)];
    const auto a = infix(names, pos);
    const auto b = infix(names, pos);
    static const char* symbols[] = {"", "", " + ", " - ", " * ", " / "};
    return "(" + a + symbols[g.op] + b + ")";
  }

  Program program_;
  std::size_t n_features_ = 0;
  std::vector<std::vector<double>> columns_;
  double n_pos_ = 0, n_neg_ = 0;
};

}  // namespace

std::unique_ptr<Classifier> make_genetic_programming() { return std::make_unique<GeneticProgramming>(); }

}  // namespace tabml::learners
