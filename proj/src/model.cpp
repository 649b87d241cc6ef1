#include "latnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "latnet/errors.hpp"

namespace latnet {

void FullParams::validate() const {
  if (beta.size() != gamma.size()) {
    throw input_error("params: beta and gamma must have the same length");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  bool ok = finite(delta) && finite(beta0) && finite(gamma0);
  for (double v : beta) ok = ok && finite(v);
  for (double v : gamma) ok = ok && finite(v);
  if (!ok) throw input_error("params: non-finite entry");
}

void Dataset::validate() const {
  const std::size_t n = X.rows();
  if (y.size() != n) throw input_error("dataset: outcome length does not match covariate rows");
  if (graph.node_count() != static_cast<int>(n)) {
    throw input_error("dataset: graph node count does not match covariate rows");
  }
  if (!ids.empty() && ids.size() != n) {
    throw input_error("dataset: id list length does not match covariate rows");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 0 && y[i] != 1) {
      throw input_error("dataset: outcome must be 0 or 1 (row " + std::to_string(i) + ")");
    }
    for (double v : X.row(i)) {
      if (!std::isfinite(v)) {
        throw input_error("dataset: non-finite covariate (row " + std::to_string(i) + ")");
      }
    }
  }
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1pexp(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

std::vector<double> linear_predictor(const Matrix& X, double intercept,
                                     std::span<const double> coef) {
  const std::size_t n = X.rows();
  std::vector<double> out(n, intercept);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = X.row(i);
    double acc = intercept;
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * coef[j];
    out[i] = acc;
  }
  return out;
}

namespace {

double row_dot(std::span<const double> x, std::span<const double> c) {
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) acc += x[j] * c[j];
  return acc;
}

// Bernoulli log-likelihood of y under linear predictor lp.
double bern_loglik(int y, double lp) { return y * lp - log1pexp(lp); }

}  // namespace

double outcome_prob(const FullParams& theta, std::span<const double> x_i, double s_i, int zeta) {
  const double lp = theta.beta0 + row_dot(x_i, theta.beta) + theta.delta * (zeta ? s_i : 0.0);
  return sigmoid(lp);
}

double susceptible_prior(const FullParams& theta, std::span<const double> x_i) {
  return sigmoid(theta.gamma0 + row_dot(x_i, theta.gamma));
}

double complete_log_likelihood(const FullParams& theta, const Dataset& data,
                               std::span<const std::int8_t> zeta) {
  theta.validate();
  const int n = data.n();
  const auto lp0 = linear_predictor(data.X, theta.beta0, theta.beta);
  const auto s = neighbor_feature_sum(data.graph, data.X, theta.beta);
  const auto prior_lp = linear_predictor(data.X, theta.gamma0, theta.gamma);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lp = lp0[i] + theta.delta * (zeta[i] ? s[i] : 0.0);
    acc += bern_loglik(data.y[i], lp);
    // zeta_i given X_i is Bernoulli with the susceptibility prior
    acc += bern_loglik(zeta[i], prior_lp[i]);
  }
  return acc;
}

double marginal_log_likelihood(const FullParams& theta, const Dataset& data) {
  theta.validate();
  const int n = data.n();
  const auto lp0 = linear_predictor(data.X, theta.beta0, theta.beta);
  const auto s = neighbor_feature_sum(data.graph, data.X, theta.beta);
  const auto prior_lp = linear_predictor(data.X, theta.gamma0, theta.gamma);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    // log[ prior * f(y | zeta=1) ] and log[ (1-prior) * f(y | zeta=0) ]
    const double la = bern_loglik(data.y[i], lp0[i] + theta.delta * s[i]) - log1pexp(-prior_lp[i]);
    const double lb = bern_loglik(data.y[i], lp0[i]) - log1pexp(prior_lp[i]);
    const double m = std::max(la, lb);
    acc += m + std::log(std::exp(la - m) + std::exp(lb - m));
  }
  return acc;
}

}  // namespace latnet
