#include "latnet/logistic.hpp"

#include <cmath>
#include <cstdlib>

#include "latnet/errors.hpp"
#include "latnet/kernels.hpp"
#include "latnet/model.hpp"

namespace latnet {

namespace {

// Cholesky solve; returns false if a pivot is non-positive or non-finite.
bool try_cholesky_solve(Matrix M, std::span<const double> v, std::vector<double>& out) {
  const std::size_t d = M.rows();
  for (std::size_t j = 0; j < d; ++j) {
    double pivot = M(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= M(j, k) * M(j, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return false;
    const double l = std::sqrt(pivot);
    M(j, j) = l;
    for (std::size_t i = j + 1; i < d; ++i) {
      double a = M(i, j);
      for (std::size_t k = 0; k < j; ++k) a -= M(i, k) * M(j, k);
      M(i, j) = a / l;
    }
  }
  out.assign(v.begin(), v.end());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < i; ++k) out[i] -= M(i, k) * out[k];
    out[i] /= M(i, i);
  }
  for (std::size_t ii = d; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < d; ++k) out[ii] -= M(k, ii) * out[k];
    out[ii] /= M(ii, ii);
  }
  return true;
}

// Columns of the design with intercept: (1, X).
std::vector<std::vector<double>> design_columns(const Matrix& X) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  std::vector<std::vector<double>> cols(p + 1);
  cols[0].assign(n, 1.0);
  for (std::size_t j = 0; j < p; ++j) cols[j + 1] = X.col(j);
  return cols;
}

double log_lik_at(std::span<const double> lp, std::span<const std::int8_t> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) acc += y[i] * lp[i] - log1pexp(lp[i]);
  return acc;
}

}  // namespace

std::vector<double> solve_spd(const Matrix& M, std::span<const double> v,
                              const std::string& context) {
  std::vector<double> out;
  if (try_cholesky_solve(M, v, out)) return out;
  const std::size_t d = M.rows();
  double trace = 0.0;
  for (std::size_t j = 0; j < d; ++j) trace += M(j, j);
  const double ridge = 1e-8 * trace / static_cast<double>(d);
  if (ridge > 0.0) {
    Matrix R = M;
    for (std::size_t j = 0; j < d; ++j) R(j, j) += ridge;
    if (try_cholesky_solve(R, v, out)) return out;
  }
  throw numeric_error("singular matrix: " + context);
}

Matrix information_matrix(std::span<const double> eta, const Matrix& X) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols() + 1;
  std::vector<double> w(n);
  {
    const auto lp = linear_predictor(X, eta[0], eta.subspan(1));
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(lp[i]);
      w[i] = p * (1.0 - p);
    }
  }
  const auto cols = design_columns(X);
  Matrix info(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = j; k < d; ++k) {
      const double v = kern::dot3(w, cols[j], cols[k]);
      info(j, k) = v;
      info(k, j) = v;
    }
  }
  return info;
}

NullFit fit_logistic(const Matrix& X, std::span<const std::int8_t> y, double tol, int max_iter) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols() + 1;
  if (y.size() != n) throw input_error("logistic: outcome length does not match covariate rows");
  const auto cols = design_columns(X);

  NullFit fit;
  fit.eta.assign(d, 0.0);
  std::vector<double> lp(n, 0.0);
  double ll = log_lik_at(lp, y);

  std::vector<double> resid(n), w(n), grad(d), step(d), eta_try(d), lp_try(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(lp[i]);
      resid[i] = y[i] - p;
      w[i] = p * (1.0 - p);
    }
    double gmax = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      grad[j] = kern::dot(resid, cols[j]);
      gmax = std::max(gmax, std::fabs(grad[j]));
    }
    if (gmax < tol) {
      fit.converged = true;
      break;
    }
    Matrix hess(d, d);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = j; k < d; ++k) {
        const double v = kern::dot3(w, cols[j], cols[k]);
        hess(j, k) = v;
        hess(k, j) = v;
      }
    }
    step = solve_spd(hess, grad, "logistic Hessian");
    // Step halving keeps the log-likelihood non-decreasing, up to round-off:
    // near the optimum a full Newton step improves by ~gmax^2, which can fall
    // below one ulp of ll, so a strict >= comparison would stall the iteration
    // on halved zero-progress steps until max_iter.
    const double slack = 1e-12 * (std::fabs(ll) + 1.0);
    bool accepted = false;
    double t = 1.0;
    for (int h = 0; h <= 30; ++h, t *= 0.5) {
      for (std::size_t j = 0; j < d; ++j) eta_try[j] = fit.eta[j] + t * step[j];
      lp_try = linear_predictor(X, eta_try[0], std::span<const double>(eta_try).subspan(1));
      const double ll_try = log_lik_at(lp_try, y);
      if (ll_try >= ll - slack) {
        fit.eta = eta_try;
        lp = lp_try;
        ll = ll_try;
        accepted = true;
        break;
      }
    }
    fit.iterations = iter + 1;
    if (!accepted) break;  // no ascent direction left at this scale
  }

  fit.log_lik = ll;
  for (double e : fit.eta) {
    if (std::fabs(e) > 30.0) fit.separable = true;
  }
  // Separation also shows up as every fitted probability saturating to its
  // observed outcome while the coefficients are still finite; the likelihood
  // then has no interior maximum.
  if (n > 0) {
    double max_resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      max_resid = std::max(max_resid, std::fabs(static_cast<double>(y[i]) - sigmoid(lp[i])));
    }
    if (max_resid < 1e-6) fit.separable = true;
  }
  fit.information = information_matrix(fit.eta, X);
  return fit;
}

}  // namespace latnet
