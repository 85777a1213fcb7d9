#include <cmath>
#include <numeric>

#include "models/learners.hpp"
#include "models/tree.hpp"

namespace tabml::learners {
namespace {

void normalize(std::vector<double>& v) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total > 0)
    for (auto& x : v) x /= total;
}

nlohmann::json trees_to_json(const std::vector<tree::Tree>& trees) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : trees) arr.push_back(tree::to_json(t));
  return arr;
}

std::vector<tree::Tree> trees_from_json(const nlohmann::json& arr) {
  std::vector<tree::Tree> trees;
  for (const auto& t : arr) trees.push_back(tree::tree_from_json(t));
  return trees;
}

class DecisionTree final : public Classifier {
 public:
  void fit(const Matrix& X, std::span<const int> y, const std::vector<FeatureKind>& kinds, const Hyperparameters& hp,
           std::uint64_t, const FitOptions&) override {
    const auto binned = tree::bin_features(X, kinds);
    tree::GrowParams params;
    params.max_depth = static_cast<int>(get_int(hp, "max_depth"));
    params.min_samples_leaf = static_cast<double>(get_int(hp, "min_samples_leaf"));
    std::vector<double> weights(X.rows(), 1.0);
    importance_.assign(X.cols(), 0.0);
    tree_ = tree::grow_classifier(binned, y, weights, params, nullptr, importance_);
    normalize(importance_);
  }

  std::vector<double> predict_proba(const Matrix& X) const override {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = tree_.predict(X.row(i));
    return out;
  }

  std::optional<std::vector<double>> builtin_importance() const override { return importance_; }

  nlohmann::json parameters() const override { return {{"tree", tree::to_json(tree_)}, {"importance", importance_}}; }

  void load_parameters(const nlohmann::json& j) override {
    tree_ = tree::tree_from_json(j.at("tree"));
    j.at("importance").get_to(importance_);
  }

  std::string describe(const std::vector<std::string>& names) const override { return tree::describe(tree_, names); }

 private:
  tree::Tree tree_;
  std::vector<double> importance_;
};

class RandomForest final : public Classifier {
 public:
  void fit(const Matrix& X, std::span<const int> y, const std::vector<FeatureKind>& kinds, const Hyperparameters& hp,
           std::uint64_t seed, const FitOptions&) override {
    const auto binned = tree::bin_features(X, kinds);
    const auto n_trees = get_int(hp, "n_estimators");
    const auto& mf = get_choice(hp, "max_features");
    const std::size_t f = X.cols();
    tree::GrowParams params;
    params.max_depth = static_cast<int>(get_int(hp, "max_depth"));
    if (mf == "sqrt") params.max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(f))));
    else if (mf == "log2") params.max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::log2(double(f))));
    else params.max_features = f;

    const std::size_t n = X.rows();
    importance_.assign(f, 0.0);
    trees_.clear();
    std::vector<double> weights(n);
    for (long long t = 0; t < n_trees; ++t) {
      Rng rng(derive_seed(seed, {"rf_tree", std::to_string(t)}));
      std::fill(weights.begin(), weights.end(), 0.0);
      for (std::size_t k = 0; k < n; ++k) weights[rng.below(n)] += 1.0;
      std::vector<double> imp(f, 0.0);
      trees_.push_back(tree::grow_classifier(binned, y, weights, params, &rng, imp));
      normalize(imp);
      for (std::size_t j = 0; j < f; ++j) importance_[j] += imp[j];
    }
    normalize(importance_);
  }

  std::vector<double> predict_proba(const Matrix& X) const override {
    std::vector<double> out(X.rows(), 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
      double s = 0.0;
      for (const auto& t : trees_) s += t.predict(X.row(i));
      out[i] = s / static_cast<double>(trees_.size());
    }
    return out;
  }

  std::optional<std::vector<double>> builtin_importance() const override { return importance_; }

  nlohmann::json parameters() const override { return {{"trees", trees_to_json(trees_)}, {"importance", importance_}}; }

  void load_parameters(const nlohmann::json& j) override {
    trees_ = trees_from_json(j.at("trees"));
    j.at("importance").get_to(importance_);
  }

 private:
  std::vector<tree::Tree> trees_;
  std::vector<double> importance_;
};

// Binomial-deviance boosting: each stage fits a regression tree to the
// residuals y - p and sets one Newton step per leaf.
class GradientBoosting final : public Classifier {
 public:
  void fit(const Matrix& X, std::span<const int> y, const std::vector<FeatureKind>& kinds, const Hyperparameters& hp,
           std::uint64_t seed, const FitOptions&) override {
    const auto binned = tree::bin_features(X, kinds);
    const auto stages = get_int(hp, "n_estimators");
    learning_rate_ = get_real(hp, "learning_rate");
    tree::GrowParams params;
    params.max_depth = static_cast<int>(get_int(hp, "max_depth"));
    const std::size_t n = X.rows(), f = X.cols();
    double pos = 0;
    for (int v : y) pos += v;
    const double prior = pos / static_cast<double>(n);
    base_ = std::log(prior / (1.0 - prior));
    std::vector<double> F(n, base_), residual(n);
    std::vector<std::uint32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0u);
    std::vector<int> leaf_of_row;
    importance_.assign(f, 0.0);
    trees_.clear();
    Rng rng(derive_seed(seed, {"gb"}));
    for (long long s = 0; s < stages; ++s) {
      for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - sigmoid(F[i]);
      auto t = tree::grow_regressor(binned, residual, rows, params, &rng, importance_, leaf_of_row);
      // Newton leaf values.
      std::vector<double> num(t.nodes.size(), 0.0), den(t.nodes.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(F[i]);
        const auto leaf = static_cast<std::size_t>(leaf_of_row[i]);
        num[leaf] += residual[i];
        den[leaf] += p * (1.0 - p);
      }
      for (std::size_t k = 0; k < t.nodes.size(); ++k) {
        if (t.nodes[k].feature >= 0) continue;
        double v = den[k] > 1e-12 ? num[k] / den[k] : 0.0;
        v *= learning_rate_;
        // Halve the step until the leaf's log-loss does not increase.
        for (int h = 0; h < 60 && v != 0.0; ++h) {
          double before = 0.0, after = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            if (static_cast<std::size_t>(leaf_of_row[i]) != k) continue;
            before += log_loss(y[i], F[i]);
            after += log_loss(y[i], F[i] + v);
          }
          if (after <= before) break;
          v *= 0.5;
          if (h == 59) v = 0.0;
        }
        t.nodes[k].value = v;
      }
      for (std::size_t i = 0; i < n; ++i) F[i] += t.nodes[static_cast<std::size_t>(leaf_of_row[i])].value;
      trees_.push_back(std::move(t));
    }
    normalize(importance_);
  }

  std::vector<double> predict_proba(const Matrix& X) const override {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = sigmoid(decision(X.row(i)));
    return out;
  }

  std::optional<std::vector<double>> builtin_importance() const override { return importance_; }

  nlohmann::json parameters() const override {
    return {{"base", base_}, {"trees", trees_to_json(trees_)}, {"importance", importance_}};
  }

  void load_parameters(const nlohmann::json& j) override {
    base_ = j.at("base").get<double>();
    trees_ = trees_from_json(j.at("trees"));
    j.at("importance").get_to(importance_);
  }

 private:
  static double log_loss(int y, double f) {
    // -[y log p + (1-y) log(1-p)] with p = sigmoid(f)
    const double z = y ? -f : f;
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }

  double decision(std::span<const double> row) const {
    double F = base_;
    for (const auto& t : trees_) F += t.predict(row);
    return F;
  }

  double base_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<tree::Tree> trees_;
  std::vector<double> importance_;
};

}  // namespace

std::unique_ptr<Classifier> make_decision_tree() { return std::make_unique<DecisionTree>(); }
std::unique_ptr<Classifier> make_random_forest() { return std::make_unique<RandomForest>(); }
std::unique_ptr<Classifier> make_gradient_boosting() { return std::make_unique<GradientBoosting>(); }

}  // namespace tabml::learners
