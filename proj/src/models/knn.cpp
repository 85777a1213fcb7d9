#include <algorithm>
#include <cmath>
#include <numeric>

#include "models/learners.hpp"

namespace tabml::learners {
namespace {

class Knn final : public Classifier {
 public:
  void fit(const Matrix& X, std::span<const int> y, const std::vector<FeatureKind>&, const Hyperparameters& hp,
           std::uint64_t, const FitOptions&) override {
    X_ = X;
    y_.assign(y.begin(), y.end());
    k_ = static_cast<std::size_t>(get_int(hp, "n_neighbors"));
    distance_weighted_ = get_choice(hp, "weights") == "distance";
  }

  std::vector<double> predict_proba(const Matrix& X) const override {
    const std::size_t n = X_.rows();
    const std::size_t k = std::min(k_, n);
    std::vector<double> out(X.rows());
    std::vector<std::pair<double, std::size_t>> d(n);
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const auto q = X.row(i);
      for (std::size_t r = 0; r < n; ++r) {
        const auto t = X_.row(r);
        double s = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) s += (q[j] - t[j]) * (q[j] - t[j]);
        d[r] = {s, r};
      }
      // Ties in distance resolve to the lower training index.
      std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
      double num = 0.0, den = 0.0;
      if (distance_weighted_ && d[0].first == 0.0) {
        for (std::size_t m = 0; m < k && d[m].first == 0.0; ++m) {
          num += y_[d[m].second];
          den += 1.0;
        }
      } else {
        for (std::size_t m = 0; m < k; ++m) {
          const double w = distance_weighted_ ? 1.0 / std::sqrt(d[m].first) : 1.0;
          num += w * y_[d[m].second];
          den += w;
        }
      }
      out[i] = num / den;
    }
    return out;
  }

  nlohmann::json parameters() const override {
    return {{"rows", X_.rows()},
            {"cols", X_.cols()},
            {"x", std::vector<double>(X_.data().begin(), X_.data().end())},
            {"y", y_},
            {"k", k_},
            {"distance", distance_weighted_}};
  }

  void load_parameters(const nlohmann::json& j) override {
    X_ = Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto x = j.at("x").get<std::vector<double>>();
    require(x.size() == X_.data().size(), "knn: archive size mismatch");
    std::copy(x.begin(), x.end(), X_.data().begin());
    j.at("y").get_to(y_);
    k_ = j.at("k").get<std::size_t>();
    distance_weighted_ = j.at("distance").get<bool>();
  }

 private:
  Matrix X_;
  std::vector<int> y_;
  std::size_t k_ = 5;
  bool distance_weighted_ = false;
};

}  // namespace

std::unique_ptr<Classifier> make_knn() { return std::make_unique<Knn>(); }

}  // namespace tabml::learners
