#include "models/svm.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <unordered_map>

#include "models/learners.hpp"

namespace tabml::svm {

KernelType kernel_from_string(const std::string& name) {
  if (name == "linear") return KernelType::linear;
  if (name == "poly") return KernelType::poly;
  if (name == "rbf") return KernelType::rbf;
  fail(ErrorKind::invalid_argument, "unknown SVM kernel '" + name + "'");
}

std::string to_string(KernelType type) {
  switch (type) {
    case KernelType::linear: return "linear";
    case KernelType::poly: return "poly";
    case KernelType::rbf: return "rbf";
  }
  return "rbf";
}

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
  if (type == KernelType::rbf) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::exp(-gamma * s);
  }
  double dot = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
  if (type == KernelType::linear) return dot;
  return std::pow(gamma * dot + coef0, degree);
}

namespace {

constexpr double kTau = 1e-12;
constexpr std::size_t kPrecomputeLimit = 4000;

/// Kernel rows, precomputed for small problems and cached otherwise.
class KernelRows {
 public:
  KernelRows(const Matrix& X, const Kernel& k) : X_(X), k_(k), n_(X.rows()) {
    if (n_ <= kPrecomputeLimit) {
      full_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i; j < n_; ++j) full_[i * n_ + j] = full_[j * n_ + i] = k_(X_.row(i), X_.row(j));
    }
    capacity_ = std::max<std::size_t>(2, (256u << 20) / (sizeof(double) * std::max<std::size_t>(n_, 1)));
  }

  const double* row(std::size_t i) {
    if (!full_.empty()) return full_.data() + i * n_;
    auto it = cache_.find(i);
    if (it != cache_.end()) return it->second.data();
    if (cache_.size() >= capacity_) {
      cache_.erase(order_.front());
      order_.pop_front();
    }
    std::vector<double> r(n_);
    for (std::size_t j = 0; j < n_; ++j) r[j] = k_(X_.row(i), X_.row(j));
    order_.push_back(i);
    return cache_.emplace(i, std::move(r)).first->second.data();
  }

  double diag(std::size_t i) const { return k_(X_.row(i), X_.row(i)); }

 private:
  const Matrix& X_;
  Kernel k_;
  std::size_t n_;
  std::vector<double> full_;
  std::size_t capacity_ = 2;
  std::unordered_map<std::size_t, std::vector<double>> cache_;
  std::deque<std::size_t> order_;
};

}  // namespace

SmoResult smo_solve(const Matrix& X, std::span<const int> labels, const Kernel& kernel, double C, double eps) {
  const std::size_t n = X.rows();
  std::vector<double> y(n), G(n, -1.0), a(n, 0.0), QD(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;
  KernelRows rows(X, kernel);
  for (std::size_t i = 0; i < n; ++i) QD[i] = rows.diag(i);

  SmoResult result;
  const long long max_iter = std::max<long long>(100000, 200 * static_cast<long long>(n));
  const double inf = std::numeric_limits<double>::infinity();
  while (result.iterations < max_iter) {
    // Working-set selection using second-order information.
    double gmax = -inf;
    std::ptrdiff_t i_idx = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (a[t] < C && -G[t] >= gmax) gmax = -G[t], i_idx = static_cast<std::ptrdiff_t>(t);
      } else {
        if (a[t] > 0 && G[t] >= gmax) gmax = G[t], i_idx = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (i_idx < 0) {
      result.converged = true;
      break;
    }
    const auto i = static_cast<std::size_t>(i_idx);
    const double* Ki = rows.row(i);
    double gmax2 = -inf, obj_min = inf;
    std::ptrdiff_t j_idx = -1;
    for (std::size_t t = 0; t < n; ++t) {
      const double Qit = y[i] * y[t] * Ki[t];
      if (y[t] > 0) {
        if (a[t] > 0) {
          const double grad_diff = gmax + G[t];
          if (G[t] >= gmax2) gmax2 = G[t];
          if (grad_diff > 0) {
            double quad = QD[i] + QD[t] - 2.0 * y[i] * Qit;
            const double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : kTau);
            if (obj <= obj_min) obj_min = obj, j_idx = static_cast<std::ptrdiff_t>(t);
          }
        }
      } else {
        if (a[t] < C) {
          const double grad_diff = gmax - G[t];
          if (-G[t] >= gmax2) gmax2 = -G[t];
          if (grad_diff > 0) {
            double quad = QD[i] + QD[t] + 2.0 * y[i] * Qit;
            const double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : kTau);
            if (obj <= obj_min) obj_min = obj, j_idx = static_cast<std::ptrdiff_t>(t);
          }
        }
      }
    }
    if (gmax + gmax2 < eps || j_idx < 0) {
      result.converged = true;
      break;
    }
    ++result.iterations;
    const auto j = static_cast<std::size_t>(j_idx);
    const double* Kj = rows.row(j);
    Ki = rows.row(i);  // a cached row may have been evicted
    const double Qij = y[i] * y[j] * Ki[j];
    const double old_ai = a[i], old_aj = a[j];
    if (y[i] != y[j]) {
      double quad = QD[i] + QD[j] + 2.0 * Qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) a[j] = 0, a[i] = diff;
      } else {
        if (a[i] < 0) a[i] = 0, a[j] = -diff;
      }
      if (diff > 0) {
        if (a[i] > C) a[i] = C, a[j] = C - diff;
      } else {
        if (a[j] > C) a[j] = C, a[i] = C + diff;
      }
    } else {
      double quad = QD[i] + QD[j] - 2.0 * Qij;
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) a[i] = C, a[j] = sum - C;
      } else {
        if (a[j] < 0) a[j] = 0, a[i] = sum;
      }
      if (sum > C) {
        if (a[j] > C) a[j] = C, a[i] = sum - C;
      } else {
        if (a[i] < 0) a[i] = 0, a[j] = sum;
      }
    }
    const double dai = a[i] - old_ai, daj = a[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) G[t] += y[i] * y[t] * Ki[t] * dai + y[j] * y[t] * Kj[t] * daj;
  }

  double ub = inf, lb = -inf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yG = y[t] * G[t];
    if (a[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yG);
      else lb = std::max(lb, yG);
    } else if (a[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yG);
      else lb = std::max(lb, yG);
    } else {
      ++n_free;
      sum_free += yG;
    }
  }
  result.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  result.alpha = std::move(a);
  return result;
}

namespace {

struct PlattFit {
  double A = 0.0;
  double B = 0.0;
};

// Platt's sigmoid P(y=1|f) = 1 / (1 + exp(A f + B)), Newton method with
// backtracking as described by Lin, Lin and Weng.
PlattFit fit_platt(const std::vector<double>& f, const std::vector<int>& y) {
  double prior1 = 0, prior0 = 0;
  for (int v : y) (v ? prior1 : prior0) += 1;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0), lo = 1.0 / (prior0 + 2.0);
  const std::size_t n = f.size();
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = y[i] ? hi : lo;
  double A = 0.0, B = std::log((prior0 + 1.0) / (prior1 + 1.0));
  auto objective = [&](double a, double b) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fApB = f[i] * a + b;
      v += fApB >= 0 ? t[i] * fApB + std::log1p(std::exp(-fApB)) : (t[i] - 1) * fApB + std::log1p(std::exp(fApB));
    }
    return v;
  };
  double fval = objective(A, B);
  for (int it = 0; it < 100; ++it) {
    double h11 = 1e-12, h22 = 1e-12, h21 = 0, g1 = 0, g2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fApB = f[i] * A + B;
      double p, q;
      if (fApB >= 0) {
        p = std::exp(-fApB) / (1.0 + std::exp(-fApB));
        q = 1.0 / (1.0 + std::exp(-fApB));
      } else {
        p = 1.0 / (1.0 + std::exp(fApB));
        q = std::exp(fApB) / (1.0 + std::exp(fApB));
      }
      const double d2 = p * q;
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = t[i] - p;
      g1 += f[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      const double nA = A + step * dA, nB = B + step * dB;
      const double nv = objective(nA, nB);
      if (nv < fval + 1e-4 * step * gd) {
        A = nA, B = nB, fval = nv;
        moved = true;
        break;
      }
      step /= 2.0;
    }
    if (!moved) break;
  }
  return {A, B};
}

class Svm final : public Classifier {
 public:
  void fit(const Matrix& X, std::span<const int> y, const std::vector<FeatureKind>&, const Hyperparameters& hp,
           std::uint64_t seed, const FitOptions& options) override {
    kernel_.type = kernel_from_string(get_choice(hp, "kernel"));
    kernel_.gamma = get_real(hp, "gamma");
    const double C = get_real(hp, "C");
    train(X, y, C);
    calibrated_ = false;
    if (!options.calibrate) return;

    // Out-of-fold decision values from an internal stratified 3-fold split.
    Rng rng(derive_seed(seed, {"svm_platt"}));
    const auto fold = learners::stratified_folds(y, 3, rng);
    std::vector<double> f(X.rows(), 0.0);
    bool usable = true;
    for (int k = 0; k < 3 && usable; ++k) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < X.rows(); ++i) (fold[i] == k ? te : tr).push_back(i);
      std::vector<int> ytr;
      int pos = 0;
      for (auto i : tr) ytr.push_back(y[i]), pos += y[i];
      if (pos == 0 || pos == static_cast<int>(tr.size())) {
        usable = false;
        break;
      }
      Svm inner;
      inner.kernel_ = kernel_;
      inner.train(X.select_rows(tr), ytr, C);
      const auto Xte = X.select_rows(te);
      for (std::size_t r = 0; r < te.size(); ++r) f[te[r]] = inner.decision(Xte.row(r));
    }
    if (!usable)
      for (std::size_t i = 0; i < X.rows(); ++i) f[i] = decision(X.row(i));
    const auto platt = fit_platt(f, std::vector<int>(y.begin(), y.end()));
    platt_a_ = platt.A;
    platt_b_ = platt.B;
    calibrated_ = true;
  }

  std::vector<double> predict_proba(const Matrix& X) const override {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const double f = decision(X.row(i));
      out[i] = calibrated_ ? sigmoid(-(platt_a_ * f + platt_b_)) : sigmoid(f);
    }
    return out;
  }

  nlohmann::json parameters() const override {
    return {{"kernel", to_string(kernel_.type)},
            {"gamma", kernel_.gamma},
            {"coef0", kernel_.coef0},
            {"degree", kernel_.degree},
            {"cols", sv_.cols()},
            {"support_vectors", std::vector<double>(sv_.data().begin(), sv_.data().end())},
            {"coef", coef_},
            {"rho", rho_},
            {"calibrated", calibrated_},
            {"platt_a", platt_a_},
            {"platt_b", platt_b_}};
  }

  void load_parameters(const nlohmann::json& j) override {
    kernel_.type = kernel_from_string(j.at("kernel").get<std::string>());
    kernel_.gamma = j.at("gamma").get<double>();
    kernel_.coef0 = j.at("coef0").get<double>();
    kernel_.degree = j.at("degree").get<int>();
    j.at("coef").get_to(coef_);
    const auto cols = j.at("cols").get<std::size_t>();
    const auto v = j.at("support_vectors").get<std::vector<double>>();
    sv_ = Matrix(coef_.size(), cols);
    require(v.size() == sv_.data().size(), "svm: archive size mismatch");
    std::copy(v.begin(), v.end(), sv_.data().begin());
    rho_ = j.at("rho").get<double>();
    calibrated_ = j.at("calibrated").get<bool>();
    platt_a_ = j.at("platt_a").get<double>();
    platt_b_ = j.at("platt_b").get<double>();
  }

 private:
  void train(const Matrix& X, std::span<const int> y, double C) {
    const auto r = smo_solve(X, y, kernel_, C);
    std::vector<std::size_t> idx;
    coef_.clear();
    for (std::size_t i = 0; i < X.rows(); ++i)
      if (r.alpha[i] > 0) {
        idx.push_back(i);
        coef_.push_back(r.alpha[i] * (y[i] == 1 ? 1.0 : -1.0));
      }
    sv_ = X.select_rows(idx);
    rho_ = r.rho;
  }

  double decision(std::span<const double> x) const {
    double s = -rho_;
    for (std::size_t k = 0; k < coef_.size(); ++k) s += coef_[k] * kernel_(sv_.row(k), x);
    return s;
  }

  Kernel kernel_;
  Matrix sv_;
  std::vector<double> coef_;
  double rho_ = 0.0;
  bool calibrated_ = false;
  double platt_a_ = 0.0, platt_b_ = 0.0;
};

}  // namespace

}  // namespace tabml::svm

namespace tabml::learners {
std::unique_ptr<Classifier> make_svm() { return std::make_unique<svm::Svm>(); }
}  // namespace tabml::learners
