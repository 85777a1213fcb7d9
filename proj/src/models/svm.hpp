#pragma once

#include <span>
#include <string>
#include <vector>

#include "tabml/common.hpp"

namespace tabml::svm {

enum class KernelType { linear, poly, rbf };

KernelType kernel_from_string(const std::string& name);
std::string to_string(KernelType type);

struct Kernel {
  KernelType type = KernelType::rbf;
  double gamma = 0.1;
  double coef0 = 1.0;
  int degree = 3;

  double operator()(std::span<const double> a, std::span<const double> b) const;
};

struct SmoResult {
  std::vector<double> alpha;
  /// Decision value is sum_i alpha_i y_i K(x_i, x) - rho, with y in {-1, +1}.
  double rho = 0.0;
  long long iterations = 0;
  bool converged = false;
};

/// C-SVC dual solved by SMO with second-order working-set selection.
/// Stops when the maximal KKT violation falls below `eps`. Labels are 0/1.
SmoResult smo_solve(const Matrix& X, std::span<const int> y, const Kernel& kernel, double C, double eps = 1e-3);

}  // namespace tabml::svm
