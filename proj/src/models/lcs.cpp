#include <algorithm>
#include <cmath>
#include <numeric>

#include "models/learners.hpp"

namespace tabml::learners {
namespace {

struct Rule {
  // Specified attributes, ascending; categorical ones use lo == hi == value.
  std::vector<std::size_t> attributes;
  std::vector<double> lo, hi;
  int phenotype = 0;
  double fitness = 0.0;
  double accuracy = 0.0;
  long long numerosity = 1;
  long long match_count = 0;
  long long correct_count = 0;
  double cs_size = 1.0;
  long long ga_time = 0;

  bool same_condition(const Rule& o) const {
    return phenotype == o.phenotype && attributes == o.attributes && lo == o.lo && hi == o.hi;
  }
};

struct Settings {
  double nu;
  long long population_size;
  long long iterations;
  long long theta_ga;
  double chi;
  double mu;
  long long theta_sub;
  double acc_sub;
  long long theta_del;
  double delta;
  double beta;
};

// Supervised Michigan-style rule learner: covering, accuracy-based fitness,
// niche GA over the correct set, subsumption and numerosity-based deletion.
class Lcs final : public Classifier {
 public:
  void fit(const Matrix& X, std::span<const int> y, const std::vector<FeatureKind>& kinds, const Hyperparameters& hp,
           std::uint64_t seed, const FitOptions&) override {
    s_ = {get_real(hp, "nu"),     get_int(hp, "population_size"), get_int(hp, "iterations"), get_int(hp, "theta_ga"),
          get_real(hp, "chi"),    get_real(hp, "mu"),             get_int(hp, "theta_sub"),  get_real(hp, "acc_sub"),
          get_int(hp, "theta_del"), get_real(hp, "delta"),        get_real(hp, "beta")};
    const std::size_t n = X.rows(), f = X.cols();
    n_features_ = f;
    categorical_.assign(f, 0);
    range_lo_.assign(f, 0.0);
    range_hi_.assign(f, 0.0);
    double level_sum = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
      categorical_[j] = kinds[j] == FeatureKind::categorical ? 1 : 0;
      auto col = X.column(j);
      std::sort(col.begin(), col.end());
      range_lo_[j] = col.front();
      range_hi_[j] = col.back();
      level_sum += static_cast<double>(std::unique(col.begin(), col.end()) - col.begin());
    }
    const double avg_levels = level_sum / static_cast<double>(f);
    rsl_ = f;
    if (avg_levels > 1.0)
      rsl_ = std::min(f, static_cast<std::size_t>(std::ceil(std::log(double(n)) / std::log(avg_levels))));
    rsl_ = std::max<std::size_t>(rsl_, 1);

    double pos = 0;
    for (int v : y) pos += v;
    prior_ = pos / static_cast<double>(n);

    Rng rng(derive_seed(seed, {"lcs"}));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    rules_.clear();
    micro_count_ = 0;
    std::vector<std::size_t> match, correct;
    for (long long t = 0; t < s_.iterations; ++t) {
      const std::size_t row = order[static_cast<std::size_t>(t) % n];
      const auto x = X.row(row);
      const int label = y[row];
      match.clear();
      correct.clear();
      for (std::size_t k = 0; k < rules_.size(); ++k)
        if (matches(rules_[k], x)) {
          match.push_back(k);
          if (rules_[k].phenotype == label) correct.push_back(k);
        }
      if (correct.empty()) {
        rules_.push_back(cover(x, label, t, rng));
        ++micro_count_;
        match.push_back(rules_.size() - 1);
        correct.push_back(rules_.size() - 1);
      }
      update(match, correct, label);
      subsume_correct_set(correct);
      run_ga(correct, x, t, rng);
      while (micro_count_ > s_.population_size) delete_one(rng);
      compact();
    }
    compute_importance();
  }

  std::vector<double> predict_proba(const Matrix& X) const override {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const auto x = X.row(i);
      double vote[2] = {0.0, 0.0};
      for (const auto& r : rules_)
        if (matches(r, x)) vote[r.phenotype] += r.fitness * static_cast<double>(r.numerosity);
      const double total = vote[0] + vote[1];
      out[i] = total > 0 ? vote[1] / total : prior_;
    }
    return out;
  }

  std::optional<std::vector<double>> builtin_importance() const override { return importance_; }

  nlohmann::json parameters() const override {
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& r : rules_)
      rules.push_back({{"attributes", r.attributes},
                       {"lo", r.lo},
                       {"hi", r.hi},
                       {"phenotype", r.phenotype},
                       {"fitness", r.fitness},
                       {"accuracy", r.accuracy},
                       {"numerosity", r.numerosity},
                       {"match_count", r.match_count},
                       {"correct_count", r.correct_count}});
    return {{"rules", rules},
            {"categorical", categorical_},
            {"prior", prior_},
            {"importance", importance_},
            {"n_features", n_features_}};
  }

  void load_parameters(const nlohmann::json& j) override {
    rules_.clear();
    for (const auto& jr : j.at("rules")) {
      Rule r;
      jr.at("attributes").get_to(r.attributes);
      jr.at("lo").get_to(r.lo);
      jr.at("hi").get_to(r.hi);
      r.phenotype = jr.at("phenotype").get<int>();
      r.fitness = jr.at("fitness").get<double>();
      r.accuracy = jr.at("accuracy").get<double>();
      r.numerosity = jr.at("numerosity").get<long long>();
      r.match_count = jr.at("match_count").get<long long>();
      r.correct_count = jr.at("correct_count").get<long long>();
      rules_.push_back(std::move(r));
    }
    j.at("categorical").get_to(categorical_);
    prior_ = j.at("prior").get<double>();
    j.at("importance").get_to(importance_);
    n_features_ = j.at("n_features").get<std::size_t>();
  }

  std::string describe(const std::vector<std::string>& names) const override {
    std::vector<std::size_t> idx(rules_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
      return rules_[a].fitness * double(rules_[a].numerosity) > rules_[b].fitness * double(rules_[b].numerosity);
    });
    std::string out;
    for (std::size_t k = 0; k < std::min<std::size_t>(idx.size(), 20); ++k) {
      const auto& r = rules_[idx[k]];
      std::vector<std::string> parts;
      for (std::size_t a = 0; a < r.attributes.size(); ++a) {
        const auto& name = names[r.attributes[a]];
        if (categorical_[r.attributes[a]]) parts.push_back(name + " == " + format_double(r.lo[a]));
        else parts.push_back(format_double(r.lo[a]) + " <= " + name + " <= " + format_double(r.hi[a]));
      }
      out += "IF " + join(parts, " AND ") + " THEN " + std::to_string(r.phenotype) +
             " (fitness " + format_double(r.fitness) + ", numerosity " + std::to_string(r.numerosity) + ")\n";
    }
    return out;
  }

 private:
  bool matches(const Rule& r, std::span<const double> x) const {
    for (std::size_t a = 0; a < r.attributes.size(); ++a) {
      const double v = x[r.attributes[a]];
      if (v < r.lo[a] || v > r.hi[a]) return false;
    }
    return true;
  }

  void specify(Rule& r, std::size_t j, std::span<const double> x, Rng& rng) const {
    double lo = x[j], hi = x[j];
    if (!categorical_[j]) {
      const double radius = rng.uniform(0.25, 0.75) * (range_hi_[j] - range_lo_[j]) / 2.0;
      lo = x[j] - radius;
      hi = x[j] + radius;
    }
    auto pos = std::lower_bound(r.attributes.begin(), r.attributes.end(), j) - r.attributes.begin();
    r.attributes.insert(r.attributes.begin() + pos, j);
    r.lo.insert(r.lo.begin() + pos, lo);
    r.hi.insert(r.hi.begin() + pos, hi);
  }

  static void generalize(Rule& r, std::size_t a) {
    r.attributes.erase(r.attributes.begin() + static_cast<std::ptrdiff_t>(a));
    r.lo.erase(r.lo.begin() + static_cast<std::ptrdiff_t>(a));
    r.hi.erase(r.hi.begin() + static_cast<std::ptrdiff_t>(a));
  }

  Rule cover(std::span<const double> x, int label, long long t, Rng& rng) const {
    Rule r;
    r.phenotype = label;
    r.ga_time = t;
    const std::size_t count = 1 + rng.below(rsl_);
    std::vector<std::size_t> pool(n_features_);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t pick = k + rng.below(n_features_ - k);
      std::swap(pool[k], pool[pick]);
      specify(r, pool[k], x, rng);
    }
    return r;
  }

  void update(const std::vector<std::size_t>& match, const std::vector<std::size_t>& correct, int label) {
    long long cs_num = 0;
    for (auto k : correct) cs_num += rules_[k].numerosity;
    for (auto k : match) {
      auto& r = rules_[k];
      ++r.match_count;
      if (r.phenotype == label) {
        ++r.correct_count;
        // Plain average while young, then a fixed learning rate.
        if (static_cast<double>(r.match_count) < 1.0 / s_.beta)
          r.cs_size += (static_cast<double>(cs_num) - r.cs_size) / static_cast<double>(r.match_count);
        else
          r.cs_size += s_.beta * (static_cast<double>(cs_num) - r.cs_size);
      }
      r.accuracy = static_cast<double>(r.correct_count) / static_cast<double>(r.match_count);
      r.fitness = std::pow(r.accuracy, s_.nu);
    }
  }

  bool can_subsume(const Rule& r) const { return r.match_count > s_.theta_sub && r.accuracy > s_.acc_sub; }

  /// True when `g` matches every input `s` matches.
  static bool more_general(const Rule& g, const Rule& s) {
    if (g.phenotype != s.phenotype || g.attributes.size() > s.attributes.size()) return false;
    std::size_t b = 0;
    for (std::size_t a = 0; a < g.attributes.size(); ++a) {
      while (b < s.attributes.size() && s.attributes[b] < g.attributes[a]) ++b;
      if (b == s.attributes.size() || s.attributes[b] != g.attributes[a]) return false;
      if (s.lo[b] < g.lo[a] || s.hi[b] > g.hi[a]) return false;
    }
    return !g.same_condition(s);
  }

  void subsume_correct_set(const std::vector<std::size_t>& correct) {
    std::ptrdiff_t best = -1;
    for (auto k : correct) {
      const auto& r = rules_[k];
      if (r.numerosity == 0 || !can_subsume(r)) continue;
      if (best < 0 || r.attributes.size() < rules_[static_cast<std::size_t>(best)].attributes.size())
        best = static_cast<std::ptrdiff_t>(k);
    }
    if (best < 0) return;
    auto& g = rules_[static_cast<std::size_t>(best)];
    for (auto k : correct) {
      if (k == static_cast<std::size_t>(best)) continue;
      auto& r = rules_[k];
      if (r.numerosity > 0 && more_general(g, r)) {
        g.numerosity += r.numerosity;
        r.numerosity = 0;
      }
    }
  }

  std::size_t tournament(const std::vector<std::size_t>& set, Rng& rng) const {
    const std::size_t size = std::max<std::size_t>(1, static_cast<std::size_t>(0.5 * static_cast<double>(set.size())));
    std::size_t best = set[rng.below(set.size())];
    for (std::size_t k = 1; k < size; ++k) {
      const std::size_t c = set[rng.below(set.size())];
      if (rules_[c].fitness > rules_[best].fitness) best = c;
    }
    return best;
  }

  void run_ga(const std::vector<std::size_t>& correct_all, std::span<const double> x, long long t, Rng& rng) {
    std::vector<std::size_t> correct;
    double stamp = 0.0, num = 0.0;
    for (auto k : correct_all) {
      if (rules_[k].numerosity == 0) continue;
      correct.push_back(k);
      stamp += static_cast<double>(rules_[k].ga_time * rules_[k].numerosity);
      num += static_cast<double>(rules_[k].numerosity);
    }
    if (correct.empty() || static_cast<double>(t) - stamp / num < static_cast<double>(s_.theta_ga)) return;
    for (auto k : correct) rules_[k].ga_time = t;

    const std::size_t p1 = tournament(correct, rng), p2 = tournament(correct, rng);
    Rule c1 = offspring(rules_[p1], t), c2 = offspring(rules_[p2], t);
    if (p1 != p2 && rng.bernoulli(s_.chi)) crossover(c1, c2, rng);
    mutate(c1, x, rng);
    mutate(c2, x, rng);
    const double fit = (rules_[p1].fitness + rules_[p2].fitness) / 2.0;
    const double acc = (rules_[p1].accuracy + rules_[p2].accuracy) / 2.0;
    for (Rule* c : {&c1, &c2}) {
      c->fitness = fit;
      c->accuracy = acc;
      if (c->attributes.empty()) continue;
      insert_child(*c, p1, p2);
    }
  }

  static Rule offspring(const Rule& p, long long t) {
    Rule c;
    c.attributes = p.attributes;
    c.lo = p.lo;
    c.hi = p.hi;
    c.phenotype = p.phenotype;
    c.cs_size = p.cs_size;
    c.ga_time = t;
    return c;
  }

  // Two-point crossover over the feature positions; both parents match the
  // current instance, so children do too.
  void crossover(Rule& a, Rule& b, Rng& rng) const {
    std::size_t p1 = rng.below(n_features_ + 1), p2 = rng.below(n_features_ + 1);
    if (p1 > p2) std::swap(p1, p2);
    if (p1 == p2) return;
    auto take = [&](const Rule& from, Rule& to, std::size_t lo, std::size_t hi) {
      for (std::size_t a2 = 0; a2 < from.attributes.size(); ++a2) {
        const auto j = from.attributes[a2];
        if (j < lo || j >= hi) continue;
        auto pos = std::lower_bound(to.attributes.begin(), to.attributes.end(), j) - to.attributes.begin();
        to.attributes.insert(to.attributes.begin() + pos, j);
        to.lo.insert(to.lo.begin() + pos, from.lo[a2]);
        to.hi.insert(to.hi.begin() + pos, from.hi[a2]);
      }
    };
    auto strip = [&](const Rule& r, std::size_t lo, std::size_t hi) {
      Rule out = r;
      for (std::size_t k = out.attributes.size(); k-- > 0;)
        if (out.attributes[k] >= lo && out.attributes[k] < hi) generalize(out, k);
      return out;
    };
    Rule na = strip(a, p1, p2), nb = strip(b, p1, p2);
    take(b, na, p1, p2);
    take(a, nb, p1, p2);
    a = std::move(na);
    b = std::move(nb);
  }

  void mutate(Rule& r, std::span<const double> x, Rng& rng) const {
    for (std::size_t j = 0; j < n_features_; ++j) {
      if (!rng.bernoulli(s_.mu)) continue;
      auto it = std::lower_bound(r.attributes.begin(), r.attributes.end(), j);
      const bool specified = it != r.attributes.end() && *it == j;
      if (specified) {
        generalize(r, static_cast<std::size_t>(it - r.attributes.begin()));
      } else if (r.attributes.size() < rsl_) {
        specify(r, j, x, rng);
      }
    }
    while (r.attributes.size() > rsl_) generalize(r, rng.below(r.attributes.size()));
  }

  void insert_child(Rule& c, std::size_t p1, std::size_t p2) {
    for (auto p : {p1, p2}) {
      auto& parent = rules_[p];
      if (parent.numerosity > 0 && can_subsume(parent) && more_general(parent, c)) {
        ++parent.numerosity;
        ++micro_count_;
        return;
      }
    }
    for (auto& r : rules_)
      if (r.numerosity > 0 && r.same_condition(c)) {
        ++r.numerosity;
        ++micro_count_;
        return;
      }
    rules_.push_back(std::move(c));
    ++micro_count_;
  }

  void delete_one(Rng& rng) {
    double fit_sum = 0.0;
    long long num = 0;
    for (const auto& r : rules_) {
      if (r.numerosity == 0) continue;
      fit_sum += r.fitness;
      num += r.numerosity;
    }
    const double mean_fit = fit_sum / static_cast<double>(std::max<long long>(num, 1));
    std::vector<double> votes(rules_.size(), 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < rules_.size(); ++k) {
      const auto& r = rules_[k];
      if (r.numerosity == 0) continue;
      double vote = r.cs_size * static_cast<double>(r.numerosity);
      const double micro_fit = r.fitness / static_cast<double>(r.numerosity);
      if (r.match_count > s_.theta_del && micro_fit < s_.delta * mean_fit)
        vote *= mean_fit / std::max(micro_fit, 1e-12);
      votes[k] = vote;
      total += vote;
    }
    double pick = rng.uniform() * total;
    for (std::size_t k = 0; k < rules_.size(); ++k) {
      if (votes[k] <= 0) continue;
      pick -= votes[k];
      if (pick <= 0 || k + 1 == rules_.size()) {
        --rules_[k].numerosity;
        --micro_count_;
        return;
      }
    }
    for (std::size_t k = rules_.size(); k-- > 0;)
      if (rules_[k].numerosity > 0) {
        --rules_[k].numerosity;
        --micro_count_;
        return;
      }
  }

  void compact() {
    rules_.erase(std::remove_if(rules_.begin(), rules_.end(), [](const Rule& r) { return r.numerosity == 0; }),
                 rules_.end());
  }

  void compute_importance() {
    importance_.assign(n_features_, 0.0);
    double total = 0.0;
    for (const auto& r : rules_) {
      const double w = r.fitness * static_cast<double>(r.numerosity);
      for (auto j : r.attributes) {
        importance_[j] += w;
        total += w;
      }
    }
    if (total > 0)
      for (auto& v : importance_) v /= total;
  }

  Settings s_{};
  std::vector<Rule> rules_;
  long long micro_count_ = 0;
  std::size_t n_features_ = 0;
  std::size_t rsl_ = 1;
  std::vector<int> categorical_;
  std::vector<double> range_lo_, range_hi_;
  double prior_ = 0.5;
  std::vector<double> importance_;
};

}  // namespace

std::unique_ptr<Classifier> make_lcs() { return std::make_unique<Lcs>(); }

}  // namespace tabml::learners
