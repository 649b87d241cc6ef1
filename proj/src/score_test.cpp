#include "latnet/score_test.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "latnet/errors.hpp"
#include "latnet/kernels.hpp"
#include "latnet/parallel.hpp"
#include "latnet/rng.hpp"

namespace latnet {

namespace {

constexpr std::size_t kMaxGridPoints = 1000000;

// Everything about (data, null fit) that the per-point statistics reuse.
struct Context {
  std::size_t n = 0;
  std::size_t d = 0;                         // p + 1
  std::vector<double> resid;                 // y - p at the null fit
  std::vector<double> s;                     // neighbor feature sums at the null coefficients
  std::vector<double> w2;                    // s * (p^2 - p)
  std::vector<std::vector<double>> xt_cols;  // columns of (1, X)
  std::vector<std::vector<double>> q_cols;   // per-covariate neighbor sums
};

Context build_context(const NullFit& fit, const Dataset& data) {
  Context ctx;
  ctx.n = static_cast<std::size_t>(data.n());
  const std::size_t p = static_cast<std::size_t>(data.p());
  ctx.d = p + 1;
  if (fit.eta.size() != ctx.d) {
    throw input_error("score test: null fit dimension does not match the data");
  }
  const auto lp = linear_predictor(data.X, fit.eta[0],
                                   std::span<const double>(fit.eta).subspan(1));
  ctx.resid.resize(ctx.n);
  ctx.w2.resize(ctx.n);
  std::vector<double> pt(ctx.n);
  for (std::size_t i = 0; i < ctx.n; ++i) {
    pt[i] = sigmoid(lp[i]);
    ctx.resid[i] = data.y[i] - pt[i];
  }
  ctx.s = neighbor_feature_sum(data.graph, data.X,
                               std::span<const double>(fit.eta).subspan(1));
  for (std::size_t i = 0; i < ctx.n; ++i) ctx.w2[i] = ctx.s[i] * (pt[i] * pt[i] - pt[i]);
  ctx.xt_cols.resize(ctx.d);
  ctx.xt_cols[0].assign(ctx.n, 1.0);
  ctx.q_cols.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    ctx.xt_cols[j + 1] = data.X.col(j);
    ctx.q_cols[j] = neighbor_sum(data.graph, ctx.xt_cols[j + 1]);
  }
  return ctx;
}

std::vector<double> prior_at(const Context& ctx, std::span<const double> phi) {
  if (phi.size() != ctx.d) throw input_error("score test: phi length must be p + 1");
  std::vector<double> prior(ctx.n, 0.0);
  for (std::size_t j = 0; j < ctx.d; ++j) kern::axpy(phi[j], ctx.xt_cols[j], prior);
  for (double& v : prior) v = sigmoid(v);
  return prior;
}

std::vector<double> z_at(const Context& ctx, std::span<const double> phi) {
  auto z = prior_at(ctx, phi);
  std::vector<double> out(ctx.n);
  kern::mul(z, ctx.s, out);
  return out;
}

// Cross term between the susceptibility direction and the null coefficients:
// row vector with entries -(sum_i prior*resid*q_ij + sum_i prior*w2*xt_ij),
// the first coordinate having no q contribution.
std::vector<double> b_at(const Context& ctx, std::span<const double> prior) {
  std::vector<double> b(ctx.d);
  for (std::size_t j = 0; j < ctx.d; ++j) {
    double t = kern::dot3(prior, ctx.w2, ctx.xt_cols[j]);
    if (j > 0) t += kern::dot3(prior, ctx.resid, ctx.q_cols[j - 1]);
    b[j] = -t;
  }
  return b;
}

std::vector<double> u_at(const Context& ctx, const NullFit& fit, std::span<const double> phi) {
  const auto prior = prior_at(ctx, phi);
  std::vector<double> z(ctx.n);
  kern::mul(prior, ctx.s, z);
  const auto b = b_at(ctx, prior);
  const auto c = solve_spd(fit.information, b, "information matrix");
  std::vector<double> m(ctx.n, 0.0);
  for (std::size_t j = 0; j < ctx.d; ++j) kern::axpy(c[j], ctx.xt_cols[j], m);
  std::vector<double> u(ctx.n);
  for (std::size_t i = 0; i < ctx.n; ++i) u[i] = ctx.resid[i] * (z[i] - m[i]);
  return u;
}

std::string fmt_levels(const std::vector<double>& levels) {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (i) os << ", ";
    os << levels[i];
  }
  os << "}";
  return os.str();
}

}  // namespace

PhiGrid default_grid(int p, const std::vector<double>& levels) {
  if (p < 0) throw input_error("grid: negative covariate count");
  if (levels.empty()) throw input_error("grid: empty level set");
  const std::size_t d = static_cast<std::size_t>(p) + 1;
  const std::size_t L = levels.size();
  double count_est = 1.0;
  for (std::size_t j = 0; j < d; ++j) count_est *= static_cast<double>(L);
  if (count_est > static_cast<double>(kMaxGridPoints)) {
    throw input_error(
        "grid: cartesian product exceeds 1e6 points; use the uniform box grid instead");
  }
  PhiGrid grid;
  grid.points.reserve(static_cast<std::size_t>(count_est));
  std::vector<std::size_t> digit(d, 0);
  for (;;) {
    std::vector<double> pt(d);
    for (std::size_t j = 0; j < d; ++j) pt[j] = levels[digit[j]];
    grid.points.push_back(std::move(pt));
    std::size_t j = d;
    while (j-- > 0) {
      if (++digit[j] < L) break;
      digit[j] = 0;
      if (j == 0) {
        std::ostringstream os;
        os << "cartesian grid " << fmt_levels(levels) << "^" << d << " ("
           << grid.points.size() << " points)";
        grid.description = os.str();
        return grid;
      }
    }
  }
}

PhiGrid uniform_box_grid(int p, int count, double lo, double hi, std::uint64_t seed) {
  if (p < 0) throw input_error("grid: negative covariate count");
  if (count < 1) throw input_error("grid: point count must be positive");
  if (!(lo < hi)) throw input_error("grid: box bounds must satisfy lo < hi");
  const std::size_t d = static_cast<std::size_t>(p) + 1;
  PhiGrid grid;
  grid.points.reserve(count);
  Rng rng(seed);
  for (int k = 0; k < count; ++k) {
    std::vector<double> pt(d);
    for (std::size_t j = 0; j < d; ++j) pt[j] = rng.uniform(lo, hi);
    grid.points.push_back(std::move(pt));
  }
  std::ostringstream os;
  os << "uniform box grid, " << count << " points in [" << lo << ", " << hi << "]^" << d
     << " (seed " << seed << ")";
  grid.description = os.str();
  return grid;
}

std::vector<double> z_star(const NullFit& fit, const Dataset& data, std::span<const double> phi) {
  const auto ctx = build_context(fit, data);
  return z_at(ctx, phi);
}

double score_stat(const NullFit& fit, const Dataset& data, std::span<const double> phi) {
  const auto ctx = build_context(fit, data);
  const auto z = z_at(ctx, phi);
  return kern::dot(z, ctx.resid);
}

std::vector<double> b_star(const NullFit& fit, const Dataset& data, std::span<const double> phi) {
  const auto ctx = build_context(fit, data);
  return b_at(ctx, prior_at(ctx, phi));
}

std::vector<double> u_components(const NullFit& fit, const Dataset& data,
                                 std::span<const double> phi) {
  const auto ctx = build_context(fit, data);
  return u_at(ctx, fit, phi);
}

SupStatistic sup_statistic(const NullFit& fit, const Dataset& data, const PhiGrid& grid) {
  if (grid.points.empty()) throw input_error("score test: empty grid");
  const auto ctx = build_context(fit, data);
  SupStatistic sup;
  sup.t_n = -1.0;
  for (const auto& phi : grid.points) {
    const auto z = z_at(ctx, phi);
    const double score = kern::dot(z, ctx.resid);
    const auto u = u_at(ctx, fit, phi);
    const double denom = kern::sumsq(u);
    if (denom <= 0.0) {
      ++sup.skipped_points;
      continue;
    }
    sup.per_point.push_back({phi, score * score / denom});
    sup.t_n = std::max(sup.t_n, sup.per_point.back().value);
  }
  if (sup.per_point.empty()) {
    throw numeric_error("score test: every grid point has a degenerate denominator");
  }
  return sup;
}

TestResult run_test(const Dataset& data, const PhiGrid& grid, int B, double alpha,
                    std::uint64_t seed, int threads) {
  data.validate();
  if (grid.points.empty()) throw input_error("score test: empty grid");
  if (B < 1) throw input_error("score test: resample count must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw input_error("score test: alpha must lie in (0, 1)");
  const std::size_t d = static_cast<std::size_t>(data.p()) + 1;
  for (const auto& phi : grid.points) {
    if (phi.size() != d) throw input_error("score test: phi length must be p + 1");
  }

  NullFit fit = fit_logistic(data.X, data.y);
  if (!fit.converged) {
    throw numeric_error("score test: null logistic fit did not converge");
  }
  if (fit.separable) {
    throw numeric_error(
        "score test: null logistic fit looks separable (a coefficient passed 30)");
  }

  const auto ctx = build_context(fit, data);
  const std::size_t n = ctx.n;

  TestResult res;
  res.alpha = alpha;
  res.seed = seed;

  // Score components per kept grid point, stored contiguously so each
  // resample is a row of dot products.
  std::vector<double> table;
  std::vector<double> denoms;
  for (const auto& phi : grid.points) {
    const auto z = z_at(ctx, phi);
    const double score = kern::dot(z, ctx.resid);
    const auto u = u_at(ctx, fit, phi);
    const double denom = kern::sumsq(u);
    if (denom <= 0.0) {
      ++res.skipped_points;
      continue;
    }
    res.per_point.push_back({phi, score * score / denom});
    denoms.push_back(denom);
    table.insert(table.end(), u.begin(), u.end());
  }
  if (res.per_point.empty()) {
    throw numeric_error("score test: every grid point has a degenerate denominator");
  }
  const std::size_t kept = res.per_point.size();
  res.t_n = 0.0;
  for (const auto& ps : res.per_point) res.t_n = std::max(res.t_n, ps.value);

  res.replicates.assign(B, 0.0);
  parallel_for_slots(B, threads, [&](int b) {
    Rng rng(seed, static_cast<std::uint64_t>(b) + 1);
    std::vector<double> xi(n);
    rng.fill_normal(xi);
    double best = 0.0;
    for (std::size_t g = 0; g < kept; ++g) {
      const double v = kern::active().dot(xi.data(), table.data() + g * n, n);
      best = std::max(best, v * v / denoms[g]);
    }
    res.replicates[b] = best;
  });

  std::vector<double> sorted = res.replicates;
  std::sort(sorted.begin(), sorted.end());
  const double rank = std::ceil((1.0 - alpha) * (B + 1));
  std::size_t idx = static_cast<std::size_t>(std::max(1.0, std::min(rank, double(B))));
  res.c_alpha = sorted[idx - 1];

  int ge = 0;
  for (double t : res.replicates) {
    if (t >= res.t_n) ++ge;
  }
  res.p_value = (1.0 + ge) / (B + 1.0);
  res.reject = res.t_n > res.c_alpha;
  return res;
}

}  // namespace latnet
