#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "latnet/matrix.hpp"

namespace latnet {

// Maximum-likelihood logistic regression of y on (1, X).
struct NullFit {
  std::vector<double> eta;  // (intercept, coefficients)
  Matrix information;       // sum of p(1-p) * xt xt' at eta
  double log_lik = 0.0;
  bool converged = false;
  bool separable = false;  // some coordinate ran past +-30
  int iterations = 0;
};

NullFit fit_logistic(const Matrix& X, std::span<const std::int8_t> y, double tol = 1e-10,
                     int max_iter = 100);

Matrix information_matrix(std::span<const double> eta, const Matrix& X);

// Solves M w = v for symmetric positive definite M via Cholesky. A failed
// factorization gets one ridge retry (1e-8 * trace / dim added to the
// diagonal); if that also fails, numeric_error naming `context`.
std::vector<double> solve_spd(const Matrix& M, std::span<const double> v,
                              const std::string& context);

}  // namespace latnet
