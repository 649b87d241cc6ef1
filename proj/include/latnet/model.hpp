#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "latnet/graph.hpp"
#include "latnet/matrix.hpp"

namespace latnet {

// Full parameter vector of the latent-susceptibility outcome model.
//
// Outcome:  P(Y_i = 1 | X, zeta_i) = sigmoid(beta0 + X_i'beta + delta * zeta_i * s_i)
// with s_i = sum over neighbors j of X_j'beta.
// Latent:   P(zeta_i = 1 | X_i) = sigmoid(gamma0 + X_i'gamma).
struct FullParams {
  double delta = 0.0;
  double beta0 = 0.0;
  std::vector<double> beta;
  double gamma0 = 0.0;
  std::vector<double> gamma;

  int covariate_count() const { return static_cast<int>(beta.size()); }
  void validate() const;
};

struct Dataset {
  Matrix X;                    // n x p covariates
  std::vector<std::int8_t> y;  // binary outcomes
  Graph graph;
  std::vector<std::string> ids;  // node labels in dataset order

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
  void validate() const;
};

double sigmoid(double x);

// log(1 + exp(x)) without overflow on either tail.
double log1pexp(double x);

// intercept + X_i'coef for every row.
std::vector<double> linear_predictor(const Matrix& X, double intercept,
                                     std::span<const double> coef);

double outcome_prob(const FullParams& theta, std::span<const double> x_i, double s_i, int zeta);
double susceptible_prior(const FullParams& theta, std::span<const double> x_i);

// Joint log-likelihood of (Y, zeta) given X and the graph.
double complete_log_likelihood(const FullParams& theta, const Dataset& data,
                               std::span<const std::int8_t> zeta);

// Log-likelihood of Y with zeta summed out, each node a two-component
// mixture handled in log space.
double marginal_log_likelihood(const FullParams& theta, const Dataset& data);

}  // namespace latnet
