#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "latnet/model.hpp"

namespace latnet {

struct EmConfig {
  double tol = 1e-6;          // Euclidean norm of the parameter change
  int max_iter = 500;         // outer EM iterations
  int inner_newton_iter = 50; // Newton iterations inside each M sub-step
};

struct FitResult {
  FullParams params;
  std::vector<double> weights;  // posterior susceptibility per node, at params
  int iterations = 0;
  bool converged = false;
  std::vector<double> marginal_loglik_trace;  // initial value, then one per iteration
  FullParams init;
  bool phi_identified = true;  // false when |delta| ended within 1e-4 of zero
  bool saturated = false;      // some capped coordinate hit its bound
};

// Posterior probability that each node is susceptible, given theta:
// w_i = prior * f(y_i | zeta=1) / [prior * f(y_i | zeta=1) + (1-prior) * f(y_i | zeta=0)],
// computed in log space.
std::vector<double> e_step(const FullParams& theta, const Dataset& data);
std::vector<double> posterior_weights(const FullParams& theta, const Dataset& data);

// Weighted logistic update for phi = (gamma0, gamma): maximizes
// sum_i [ w_i * (gamma0 + x_i'gamma) - log(1 + exp(gamma0 + x_i'gamma)) ].
// Coordinates are capped at +-30 when the weights push them off to infinity;
// *saturated reports that.
std::vector<double> m_step_phi(std::span<const double> w, const Matrix& X,
                               std::span<const double> start, int max_newton,
                               bool* saturated = nullptr);

// Univariate update of delta at fixed (beta0, beta), safeguarded Newton on
// [-50, 50]. When no node carries weight and signal (sum w*s^2 = 0) the
// current delta is returned and *identifiable set to false.
double m_step_delta(const FullParams& theta, std::span<const double> w, const Dataset& data,
                    bool* identifiable = nullptr);

// Update of (beta0, beta) maximizing the profiled objective in which the
// susceptibility offsets u_i = delta_new * s_i(beta_old) are frozen.
std::vector<double> m_step_beta(double delta_new, const FullParams& theta,
                                std::span<const double> w, const Dataset& data, int max_newton);

// Full EM fit: init at (delta = 0, phi = 0, beta = plain logistic MLE),
// sub-steps phi -> delta -> beta per iteration, stop when the parameter
// change drops below cfg.tol. Deterministic given (data, cfg); the seed is
// recorded but unused by the EM path itself.
FitResult fit_em(const Dataset& data, const EmConfig& cfg, std::uint64_t seed = 0);

}  // namespace latnet
