#include <cmath>

#include <Eigen/Dense>

#include "models/learners.hpp"

namespace tabml::learners {
namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// L2-penalized logistic regression: mean log-loss + lambda/2 |w|^2 with an
// unpenalized intercept, minimized by damped Newton steps.
class LogisticRegression final : public Classifier {
 public:
  void fit(const Matrix& X, std::span<const int> y, const std::vector<FeatureKind>&, const Hyperparameters& hp,
           std::uint64_t, const FitOptions&) override {
    const double lambda = get_real(hp, "lambda");
    const auto n = static_cast<Eigen::Index>(X.rows());
    const auto f = static_cast<Eigen::Index>(X.cols());
    Eigen::MatrixXd A(n, f + 1);
    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < f; ++j) A(i, j) = X(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      A(i, f) = 1.0;
      t(i) = y[static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(f + 1, lambda);
    penalty(f) = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);

    auto objective = [&](const Eigen::VectorXd& beta) {
      Eigen::VectorXd z = A * beta;
      double loss = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) loss += softplus(z(i)) - t(i) * z(i);
      return loss * inv_n + 0.5 * (penalty.array() * beta.array().square()).sum();
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(f + 1);
    double current = objective(beta);
    for (int iter = 0; iter < 100; ++iter) {
      Eigen::VectorXd z = A * beta;
      Eigen::VectorXd p(n), s(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        p(i) = sigmoid(z(i));
        s(i) = std::max(p(i) * (1.0 - p(i)), 1e-12);
      }
      Eigen::VectorXd grad = A.transpose() * (p - t) * inv_n + penalty.cwiseProduct(beta);
      if (grad.norm() < 1e-6) break;
      Eigen::MatrixXd H = A.transpose() * s.asDiagonal() * A * inv_n;
      H.diagonal() += penalty;
      H.diagonal().array() += 1e-10;
      Eigen::VectorXd step = H.ldlt().solve(grad);
      double alpha = 1.0;
      bool moved = false;
      for (int k = 0; k < 40; ++k) {
        Eigen::VectorXd candidate = beta - alpha * step;
        const double value = objective(candidate);
        if (value <= current - 1e-4 * alpha * grad.dot(step)) {
          beta = candidate;
          current = value;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
    }
    weights_.assign(beta.data(), beta.data() + f);
    intercept_ = beta(f);
  }

  std::vector<double> predict_proba(const Matrix& X) const override {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      double z = intercept_;
      for (std::size_t j = 0; j < X.cols(); ++j) z += weights_[j] * X(i, j);
      out[i] = sigmoid(z);
    }
    return out;
  }

  std::optional<std::vector<double>> builtin_importance() const override {
    std::vector<double> imp(weights_.size());
    for (std::size_t j = 0; j < imp.size(); ++j) imp[j] = std::abs(weights_[j]);
    return imp;
  }

  nlohmann::json parameters() const override { return {{"weights", weights_}, {"intercept", intercept_}}; }

  void load_parameters(const nlohmann::json& j) override {
    j.at("weights").get_to(weights_);
    intercept_ = j.at("intercept").get<double>();
  }

  std::string describe(const std::vector<std::string>& names) const override {
    std::string out = "logit = " + format_double(intercept_);
    for (std::size_t j = 0; j < weights_.size(); ++j) out += " + " + format_double(weights_[j]) + "*" + names[j];
    return out + "\n";
  }

 private:
  std::vector<double> weights_;
  double intercept_ = 0.0;
};

}  // namespace

std::unique_ptr<Classifier> make_logistic_regression() { return std::make_unique<LogisticRegression>(); }

}  // namespace tabml::learners
