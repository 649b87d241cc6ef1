#include "latnet/em.hpp"

#include <cassert>
#include <cmath>

#include "latnet/errors.hpp"
#include "latnet/kernels.hpp"
#include "latnet/logistic.hpp"

namespace latnet {

namespace {

// Quantities that depend on (beta0, beta) only; refreshed when beta moves.
struct BetaCache {
  std::vector<double> lp0;  // beta0 + X_i'beta
  std::vector<double> s;    // neighbor feature sums at beta

  void refresh(const FullParams& th, const Dataset& data) {
    lp0 = linear_predictor(data.X, th.beta0, th.beta);
    s = neighbor_feature_sum(data.graph, data.X, th.beta);
  }
};

std::vector<double> weights_from(const FullParams& th, const Dataset& data,
                                 const BetaCache& cache) {
  const int n = data.n();
  const auto plp = linear_predictor(data.X, th.gamma0, th.gamma);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    const double lp1 = cache.lp0[i] + th.delta * cache.s[i];
    const double la = data.y[i] * lp1 - log1pexp(lp1) - log1pexp(-plp[i]);
    const double lb = data.y[i] * cache.lp0[i] - log1pexp(cache.lp0[i]) - log1pexp(plp[i]);
    const double m = std::max(la, lb);
    const double ea = std::exp(la - m);
    w[i] = ea / (ea + std::exp(lb - m));
  }
  return w;
}

// Objective of the phi sub-step.
double phi_objective(std::span<const double> w, const std::vector<std::vector<double>>& cols,
                     std::span<const double> phi) {
  const std::size_t n = cols[0].size();
  std::vector<double> lp(n, 0.0);
  for (std::size_t j = 0; j < cols.size(); ++j) kern::axpy(phi[j], cols[j], lp);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * lp[i] - log1pexp(lp[i]);
  return acc;
}

std::vector<std::vector<double>> design_columns(const Matrix& X) {
  std::vector<std::vector<double>> cols(X.cols() + 1);
  cols[0].assign(X.rows(), 1.0);
  for (std::size_t j = 0; j < X.cols(); ++j) cols[j + 1] = X.col(j);
  return cols;
}

// Derivative of the delta sub-step objective.
double delta_slope(double delta, std::span<const double> w, const BetaCache& cache,
                   const Dataset& data) {
  double g = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    g += w[i] * cache.s[i] * (data.y[i] - sigmoid(cache.lp0[i] + delta * cache.s[i]));
  }
  return g;
}

double delta_curvature(double delta, std::span<const double> w, const BetaCache& cache,
                       const Dataset& data) {
  double h = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const double p = sigmoid(cache.lp0[i] + delta * cache.s[i]);
    h -= w[i] * cache.s[i] * cache.s[i] * p * (1.0 - p);
  }
  return h;
}

[[maybe_unused]] double delta_objective(double delta, std::span<const double> w,
                                        const BetaCache& cache, const Dataset& data) {
  double acc = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const double lp1 = cache.lp0[i] + delta * cache.s[i];
    acc += w[i] * (data.y[i] * lp1 - log1pexp(lp1));
  }
  return acc;
}

double m_step_delta_cached(const FullParams& theta, std::span<const double> w,
                           const BetaCache& cache, const Dataset& data, bool* identifiable) {
  if (identifiable) *identifiable = true;
  double curv0 = 0.0;
  for (int i = 0; i < data.n(); ++i) curv0 += w[i] * cache.s[i] * cache.s[i];
  if (curv0 <= 0.0) {
    // No weighted signal: the objective is flat in delta.
    if (identifiable) *identifiable = false;
    return theta.delta;
  }
  double lo = -50.0, hi = 50.0;
  if (delta_slope(lo, w, cache, data) <= 0.0) return lo;
  if (delta_slope(hi, w, cache, data) >= 0.0) return hi;
  double x = std::clamp(theta.delta, lo, hi);
  const double gtol = 1e-10 * (1.0 + curv0);
  for (int it = 0; it < 200; ++it) {
    const double g = delta_slope(x, w, cache, data);
    if (std::fabs(g) <= gtol) break;
    if (g > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double h = delta_curvature(x, w, cache, data);
    double next = x - g / h;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-13) {
      x = next;
      break;
    }
    x = next;
  }
  assert(delta_objective(x, w, cache, data) >=
         delta_objective(std::clamp(theta.delta, -50.0, 50.0), w, cache, data) - 1e-8);
  return x;
}

// Profiled objective of the beta sub-step, with frozen offsets u.
double beta_objective(std::span<const double> lp, std::span<const double> u,
                      std::span<const double> w, std::span<const std::int8_t> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    acc += y[i] * (lp[i] + w[i] * u[i]) - w[i] * log1pexp(lp[i] + u[i]) -
           (1.0 - w[i]) * log1pexp(lp[i]);
  }
  return acc;
}

std::vector<double> m_step_beta_cached(double delta_new, const FullParams& theta,
                                       std::span<const double> w, const BetaCache& cache,
                                       const Dataset& data, int max_newton) {
  const std::size_t n = static_cast<std::size_t>(data.n());
  const std::size_t d = static_cast<std::size_t>(data.p()) + 1;
  const auto cols = design_columns(data.X);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = delta_new * cache.s[i];

  std::vector<double> eta(d);
  eta[0] = theta.beta0;
  for (std::size_t j = 1; j < d; ++j) eta[j] = theta.beta[j - 1];
  std::vector<double> lp = linear_predictor(data.X, eta[0], std::span<const double>(eta).subspan(1));
  double obj = beta_objective(lp, u, w, data.y);
  const double obj_start = obj;

  std::vector<double> resid(n), hw(n), grad(d), step(d), eta_try(d), lp_try(n);
  for (int iter = 0; iter < max_newton; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p1 = sigmoid(lp[i] + u[i]);
      const double p0 = sigmoid(lp[i]);
      resid[i] = data.y[i] - w[i] * p1 - (1.0 - w[i]) * p0;
      hw[i] = w[i] * p1 * (1.0 - p1) + (1.0 - w[i]) * p0 * (1.0 - p0);
    }
    double gmax = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      grad[j] = kern::dot(resid, cols[j]);
      gmax = std::max(gmax, std::fabs(grad[j]));
    }
    if (gmax < 1e-8) break;
    Matrix hess(d, d);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = j; k < d; ++k) {
        const double v = kern::dot3(hw, cols[j], cols[k]);
        hess(j, k) = v;
        hess(k, j) = v;
      }
    }
    step = solve_spd(hess, grad, "susceptibility-adjusted Hessian");
    const double slack = 1e-12 * (std::fabs(obj) + 1.0);
    bool accepted = false;
    double t = 1.0;
    for (int h = 0; h <= 30; ++h, t *= 0.5) {
      for (std::size_t j = 0; j < d; ++j) eta_try[j] = eta[j] + t * step[j];
      lp_try = linear_predictor(data.X, eta_try[0], std::span<const double>(eta_try).subspan(1));
      const double obj_try = beta_objective(lp_try, u, w, data.y);
      if (obj_try >= obj - slack) {
        eta = eta_try;
        lp = lp_try;
        obj = obj_try;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  assert(obj >= obj_start - 1e-9);
  (void)obj_start;
  return eta;
}

}  // namespace

std::vector<double> e_step(const FullParams& theta, const Dataset& data) {
  theta.validate();
  data.validate();
  if (theta.covariate_count() != data.p()) {
    throw input_error("em: parameter dimension does not match the data");
  }
  BetaCache cache;
  cache.refresh(theta, data);
  return weights_from(theta, data, cache);
}

std::vector<double> posterior_weights(const FullParams& theta, const Dataset& data) {
  return e_step(theta, data);
}

std::vector<double> m_step_phi(std::span<const double> w, const Matrix& X,
                               std::span<const double> start, int max_newton, bool* saturated) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols() + 1;
  if (w.size() != n) throw input_error("em: weight length does not match covariate rows");
  if (start.size() != d) throw input_error("em: start vector must have length p + 1");
  bool sat_local = false;
  const auto cols = design_columns(X);

  std::vector<double> phi(start.begin(), start.end());
  double obj = phi_objective(w, cols, phi);
  const double obj_start = obj;
  std::vector<double> lp(n), resid(n), hw(n), grad(d), step(d), phi_try(d);
  for (int iter = 0; iter < max_newton; ++iter) {
    lp.assign(n, 0.0);
    for (std::size_t j = 0; j < d; ++j) kern::axpy(phi[j], cols[j], lp);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(lp[i]);
      resid[i] = w[i] - p;
      hw[i] = p * (1.0 - p);
    }
    double gmax = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      grad[j] = kern::dot(resid, cols[j]);
      gmax = std::max(gmax, std::fabs(grad[j]));
    }
    if (gmax < 1e-8) break;
    Matrix hess(d, d);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = j; k < d; ++k) {
        const double v = kern::dot3(hw, cols[j], cols[k]);
        hess(j, k) = v;
        hess(k, j) = v;
      }
    }
    step = solve_spd(hess, grad, "susceptibility-prior Hessian");
    const double slack = 1e-12 * (std::fabs(obj) + 1.0);
    bool accepted = false;
    double t = 1.0;
    for (int h = 0; h <= 30; ++h, t *= 0.5) {
      for (std::size_t j = 0; j < d; ++j) phi_try[j] = phi[j] + t * step[j];
      const double obj_try = phi_objective(w, cols, phi_try);
      if (obj_try >= obj - slack) {
        phi = phi_try;
        obj = obj_try;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    bool capped = false;
    for (std::size_t j = 0; j < d; ++j) {
      if (std::fabs(phi[j]) > 30.0) {
        phi[j] = phi[j] > 0.0 ? 30.0 : -30.0;
        capped = true;
      }
    }
    if (capped) {
      // Degenerate weights are pushing the prior to 0/1; stop at the cap.
      sat_local = true;
      obj = phi_objective(w, cols, phi);
      break;
    }
  }
  assert(phi_objective(w, cols, phi) >= obj_start - 1e-9 || sat_local);
  (void)obj_start;
  if (saturated) *saturated = sat_local;
  return phi;
}

double m_step_delta(const FullParams& theta, std::span<const double> w, const Dataset& data,
                    bool* identifiable) {
  BetaCache cache;
  cache.refresh(theta, data);
  return m_step_delta_cached(theta, w, cache, data, identifiable);
}

std::vector<double> m_step_beta(double delta_new, const FullParams& theta,
                                std::span<const double> w, const Dataset& data, int max_newton) {
  BetaCache cache;
  cache.refresh(theta, data);
  return m_step_beta_cached(delta_new, theta, w, cache, data, max_newton);
}

FitResult fit_em(const Dataset& data, const EmConfig& cfg, std::uint64_t seed) {
  (void)seed;  // the EM path is deterministic
  data.validate();
  if (cfg.tol <= 0.0) throw input_error("em: tolerance must be positive");
  if (cfg.max_iter < 1) throw input_error("em: max_iter must be positive");
  const int p = data.p();

  NullFit null = fit_logistic(data.X, data.y);
  if (!null.converged || null.separable) {
    throw numeric_error("em: initial logistic fit failed (non-convergent or separable)");
  }

  FitResult res;
  FullParams th;
  th.delta = 0.0;
  th.beta0 = null.eta[0];
  th.beta.assign(null.eta.begin() + 1, null.eta.end());
  th.gamma0 = 0.0;
  th.gamma.assign(p, 0.0);
  res.init = th;

  BetaCache cache;
  cache.refresh(th, data);
  res.marginal_loglik_trace.push_back(marginal_log_likelihood(th, data));

  std::vector<double> phi_cur(p + 1, 0.0);
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    const FullParams prev = th;
    const auto w = weights_from(th, data, cache);

    // phi update
    phi_cur[0] = th.gamma0;
    for (int j = 0; j < p; ++j) phi_cur[j + 1] = th.gamma[j];
    bool sat = false;
    const auto phi_new = m_step_phi(w, data.X, phi_cur, cfg.inner_newton_iter, &sat);
    res.saturated = res.saturated || sat;
    th.gamma0 = phi_new[0];
    for (int j = 0; j < p; ++j) th.gamma[j] = phi_new[j + 1];

    // delta update at the current beta
    bool ident = true;
    th.delta = m_step_delta_cached(th, w, cache, data, &ident);
    if (std::fabs(th.delta) >= 50.0) res.saturated = true;

    // beta update against frozen offsets; a shrinking backstop keeps the
    // marginal log-likelihood from slipping when the frozen neighbor sums
    // lag a large move
    const auto eta_new = m_step_beta_cached(th.delta, th, w, cache, data, cfg.inner_newton_iter);
    const double base = res.marginal_loglik_trace.back();
    {
      const double b0_old = th.beta0;
      const std::vector<double> b_old = th.beta;
      double t = 1.0;
      bool placed = false;
      for (int h = 0; h <= 30; ++h, t *= 0.5) {
        th.beta0 = b0_old + t * (eta_new[0] - b0_old);
        for (int j = 0; j < p; ++j) th.beta[j] = b_old[j] + t * (eta_new[j + 1] - b_old[j]);
        if (marginal_log_likelihood(th, data) >= base - 1e-10) {
          placed = true;
          break;
        }
      }
      if (!placed) {
        th.beta0 = b0_old;
        th.beta = b_old;
      }
      cache.refresh(th, data);
    }

    res.iterations = iter;
    res.marginal_loglik_trace.push_back(marginal_log_likelihood(th, data));

    double change = 0.0;
    auto add = [&change](double a, double b) { change += (a - b) * (a - b); };
    add(th.delta, prev.delta);
    add(th.beta0, prev.beta0);
    add(th.gamma0, prev.gamma0);
    for (int j = 0; j < p; ++j) {
      add(th.beta[j], prev.beta[j]);
      add(th.gamma[j], prev.gamma[j]);
    }
    if (std::sqrt(change) < cfg.tol) {
      res.converged = true;
      break;
    }
  }

  res.params = th;
  res.weights = weights_from(th, data, cache);
  res.phi_identified = std::fabs(th.delta) >= 1e-4;
  return res;
}

}  // namespace latnet
