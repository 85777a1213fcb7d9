#include <cmath>
#include <numbers>

#include "models/learners.hpp"

namespace tabml::learners {
namespace {

// Gaussian likelihoods for quantitative features, Laplace-smoothed level
// tables (alpha = 1) for categorical ones.
class NaiveBayes final : public Classifier {
 public:
  void fit(const Matrix& X, std::span<const int> y, const std::vector<FeatureKind>& kinds, const Hyperparameters&,
           std::uint64_t, const FitOptions&) override {
    const std::size_t n = X.rows(), f = X.cols();
    double count[2] = {0, 0};
    for (int v : y) count[v] += 1;
    log_prior_ = {std::log(count[0] / static_cast<double>(n)), std::log(count[1] / static_cast<double>(n))};
    categorical_.assign(f, 0);
    mean_.assign(2, std::vector<double>(f, 0.0));
    var_.assign(2, std::vector<double>(f, 0.0));
    levels_.assign(f, {});
    log_table_.assign(2, std::vector<std::vector<double>>(f));
    log_unseen_.assign(2, std::vector<double>(f, 0.0));
    double max_var = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
      if (kinds[j] == FeatureKind::categorical) {
        categorical_[j] = 1;
        std::map<double, std::array<double, 2>> tally;
        for (std::size_t i = 0; i < n; ++i) tally[X(i, j)][static_cast<std::size_t>(y[i])] += 1;
        const double L = static_cast<double>(tally.size());
        for (int c = 0; c < 2; ++c) {
          auto& table = log_table_[static_cast<std::size_t>(c)][j];
          for (const auto& [level, counts] : tally)
            table.push_back(std::log((counts[static_cast<std::size_t>(c)] + 1.0) / (count[c] + L)));
          log_unseen_[static_cast<std::size_t>(c)][j] = std::log(1.0 / (count[c] + L));
        }
        for (const auto& kv : tally) levels_[j].push_back(kv.first);
        continue;
      }
      double all_sum = 0.0, all_sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        mean_[static_cast<std::size_t>(y[i])][j] += X(i, j);
        all_sum += X(i, j);
      }
      for (int c = 0; c < 2; ++c) mean_[static_cast<std::size_t>(c)][j] /= count[c];
      for (std::size_t i = 0; i < n; ++i) {
        const double d = X(i, j) - mean_[static_cast<std::size_t>(y[i])][j];
        var_[static_cast<std::size_t>(y[i])][j] += d * d;
        const double a = X(i, j) - all_sum / static_cast<double>(n);
        all_sq += a * a;
      }
      for (int c = 0; c < 2; ++c) var_[static_cast<std::size_t>(c)][j] /= count[c];
      max_var = std::max(max_var, all_sq / static_cast<double>(n));
    }
    // Variance floor keeps constant-within-class features finite.
    const double eps = 1e-9 * std::max(max_var, 1e-12);
    for (auto& v : var_)
      for (auto& x : v) x += eps;
  }

  std::vector<double> predict_proba(const Matrix& X) const override {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      double lp[2] = {log_prior_[0], log_prior_[1]};
      for (std::size_t j = 0; j < X.cols(); ++j) {
        const double x = X(i, j);
        for (std::size_t c = 0; c < 2; ++c) {
          if (categorical_[j]) {
            const auto& lv = levels_[j];
            auto it = std::lower_bound(lv.begin(), lv.end(), x);
            if (it != lv.end() && *it == x) lp[c] += log_table_[c][j][static_cast<std::size_t>(it - lv.begin())];
            else lp[c] += log_unseen_[c][j];
          } else {
            const double d = x - mean_[c][j];
            lp[c] += -0.5 * std::log(2.0 * std::numbers::pi * var_[c][j]) - d * d / (2.0 * var_[c][j]);
          }
        }
      }
      out[i] = sigmoid(lp[1] - lp[0]);
    }
    return out;
  }

  nlohmann::json parameters() const override {
    return {{"log_prior", log_prior_}, {"categorical", categorical_}, {"mean", mean_},
            {"var", var_},             {"levels", levels_},           {"log_table", log_table_},
            {"log_unseen", log_unseen_}};
  }

  void load_parameters(const nlohmann::json& j) override {
    j.at("log_prior").get_to(log_prior_);
    j.at("categorical").get_to(categorical_);
    j.at("mean").get_to(mean_);
    j.at("var").get_to(var_);
    j.at("levels").get_to(levels_);
    j.at("log_table").get_to(log_table_);
    j.at("log_unseen").get_to(log_unseen_);
  }

 private:
  std::array<double, 2> log_prior_{};
  std::vector<int> categorical_;
  std::vector<std::vector<double>> mean_, var_;
  std::vector<std::vector<double>> levels_;
  std::vector<std::vector<std::vector<double>>> log_table_;
  std::vector<std::vector<double>> log_unseen_;
};

}  // namespace

std::unique_ptr<Classifier> make_naive_bayes() { return std::make_unique<NaiveBayes>(); }

}  // namespace tabml::learners
