#include "latnet/sim_study.hpp"

#include <cmath>
#include <string>

#include "latnet/errors.hpp"
#include "latnet/parallel.hpp"

namespace latnet {

SimConfig default_sim_config() {
  SimConfig cfg;
  cfg.sbm.block_sizes = {500, 500, 400, 400, 200};
  cfg.sbm.connect_prob = Matrix(5, 5, 1e-4);
  const double diag[5] = {0.01, 0.10, 0.05, 0.15, 0.10};
  for (int k = 0; k < 5; ++k) cfg.sbm.connect_prob(k, k) = diag[k];
  cfg.truth.delta = 0.0;
  cfg.truth.beta0 = 0.5;
  cfg.truth.beta = {-1.0, 1.0};
  cfg.truth.gamma0 = 0.0;
  cfg.truth.gamma = {-1.0, 1.0};
  return cfg;
}

namespace {

Matrix draw_covariates(const SimConfig& cfg, int n, Rng& rng) {
  Matrix X(n, 2);
  if (cfg.cov_case == CovCase::kI) {
    for (int i = 0; i < n; ++i) {
      X(i, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
      X(i, 1) = rng.uniform(-1.0, 1.0);
    }
  } else {
    const double sd2 = cfg.x2_scale_is_sd ? 2.0 : std::sqrt(2.0);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = rng.normal();
      X(i, 1) = sd2 * rng.normal();
    }
  }
  return X;
}

Dataset assemble(const SimConfig& cfg, double delta, Graph graph, Rng& rng) {
  const int n = graph.node_count();
  Dataset data;
  data.X = draw_covariates(cfg, n, rng);
  data.graph = std::move(graph);

  FullParams th = cfg.truth;
  th.delta = delta;
  const auto prior_lp = linear_predictor(data.X, th.gamma0, th.gamma);
  std::vector<std::int8_t> zeta(n);
  for (int i = 0; i < n; ++i) zeta[i] = rng.bernoulli(sigmoid(prior_lp[i])) ? 1 : 0;

  const auto lp0 = linear_predictor(data.X, th.beta0, th.beta);
  const auto s = neighbor_feature_sum(data.graph, data.X, th.beta);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double lp = lp0[i] + delta * (zeta[i] ? s[i] : 0.0);
    data.y[i] = rng.bernoulli(sigmoid(lp)) ? 1 : 0;
  }
  data.ids.resize(n);
  for (int i = 0; i < n; ++i) data.ids[i] = std::to_string(i);
  return data;
}

}  // namespace

Dataset generate_case(const SimConfig& cfg, double delta, Rng& rng) {
  return assemble(cfg, delta, sbm_generate(cfg.sbm, rng), rng);
}

Dataset generate_case(const SimConfig& cfg, double delta, const Graph& graph, Rng& rng) {
  return assemble(cfg, delta, graph, rng);
}

namespace {

// Stream layout: stream 0 draws the shared graph when fixed_graph is set;
// replicate r of delta cell d uses stream d * replicates + r + 1. The score
// test itself receives an independent derived seed per replicate.
std::uint64_t replicate_stream(const SimConfig& cfg, std::size_t delta_idx, int rep) {
  return delta_idx * static_cast<std::uint64_t>(cfg.replicates) + rep + 1;
}

}  // namespace

SizePowerReport size_power_study(const SimConfig& cfg, std::span<const double> deltas) {
  if (cfg.replicates < 1) throw input_error("study: replicate count must be positive");
  if (deltas.empty()) throw input_error("study: empty delta list");
  cfg.sbm.validate();

  Graph shared;
  if (cfg.fixed_graph) {
    Rng rng(cfg.seed, 0);
    shared = sbm_generate(cfg.sbm, rng);
  }
  const PhiGrid grid = default_grid(static_cast<int>(cfg.truth.beta.size()), cfg.grid_levels);

  SizePowerReport report;
  for (std::size_t di = 0; di < deltas.size(); ++di) {
    std::vector<SizePowerRow> rows(cfg.replicates);
    parallel_for_slots(cfg.replicates, cfg.threads, [&](int r) {
      const std::uint64_t stream = replicate_stream(cfg, di, r);
      Rng rng(cfg.seed, stream);
      SizePowerRow row;
      row.delta = deltas[di];
      row.replicate = r;
      try {
        Dataset data = cfg.fixed_graph ? generate_case(cfg, deltas[di], shared, rng)
                                       : generate_case(cfg, deltas[di], rng);
        const TestResult res =
            run_test(data, grid, cfg.test_B, cfg.alpha, derive_seed(cfg.seed, stream), 1);
        row.t_n = res.t_n;
        row.c_alpha = res.c_alpha;
        row.p_value = res.p_value;
        row.reject = res.reject;
      } catch (const numeric_error&) {
        row.excluded = true;
      }
      rows[r] = row;
    });
    SizePowerCell cell;
    cell.delta = deltas[di];
    for (const auto& row : rows) {
      if (row.excluded) {
        ++cell.excluded;
      } else {
        ++cell.used;
        if (row.reject) ++cell.rejections;
      }
      report.rows.push_back(row);
    }
    cell.rejection_rate = cell.used > 0 ? static_cast<double>(cell.rejections) / cell.used : 0.0;
    report.cells.push_back(cell);
  }
  return report;
}

BiasMseReport bias_mse_study(const SimConfig& cfg, std::span<const double> deltas,
                             Estimator estimator) {
  if (cfg.replicates < 1) throw input_error("study: replicate count must be positive");
  if (deltas.empty()) throw input_error("study: empty delta list");
  cfg.sbm.validate();
  const int p = static_cast<int>(cfg.truth.beta.size());

  Graph shared;
  if (cfg.fixed_graph) {
    Rng rng(cfg.seed, 0);
    shared = sbm_generate(cfg.sbm, rng);
  }

  BiasMseReport report;
  report.estimator = estimator;
  if (estimator == Estimator::kEm) {
    report.param_names.push_back("delta");
    report.param_names.push_back("beta0");
    for (int j = 0; j < p; ++j) report.param_names.push_back("beta" + std::to_string(j + 1));
    report.param_names.push_back("gamma0");
    for (int j = 0; j < p; ++j) report.param_names.push_back("gamma" + std::to_string(j + 1));
  } else {
    report.param_names.push_back("beta0");
    for (int j = 0; j < p; ++j) report.param_names.push_back("beta" + std::to_string(j + 1));
  }
  const std::size_t np = report.param_names.size();

  for (std::size_t di = 0; di < deltas.size(); ++di) {
    std::vector<BiasMseRow> rows(cfg.replicates);
    parallel_for_slots(cfg.replicates, cfg.threads, [&](int r) {
      const std::uint64_t stream = replicate_stream(cfg, di, r);
      Rng rng(cfg.seed, stream);
      BiasMseRow row;
      row.delta = deltas[di];
      row.replicate = r;
      try {
        Dataset data = cfg.fixed_graph ? generate_case(cfg, deltas[di], shared, rng)
                                       : generate_case(cfg, deltas[di], rng);
        if (estimator == Estimator::kEm) {
          const FitResult fit = fit_em(data, cfg.em, derive_seed(cfg.seed, stream));
          row.converged = fit.converged;
          row.iterations = fit.iterations;
          row.estimates.push_back(fit.params.delta);
          row.estimates.push_back(fit.params.beta0);
          for (double b : fit.params.beta) row.estimates.push_back(b);
          row.estimates.push_back(fit.params.gamma0);
          for (double g : fit.params.gamma) row.estimates.push_back(g);
        } else {
          const NullFit fit = fit_logistic(data.X, data.y);
          if (!fit.converged || fit.separable) throw numeric_error("study: logistic fit failed");
          row.converged = true;
          row.iterations = fit.iterations;
          for (double e : fit.eta) row.estimates.push_back(e);
        }
      } catch (const numeric_error&) {
        row.excluded = true;
        row.estimates.clear();
      }
      rows[r] = row;
    });

    std::vector<double> truth(np, 0.0);
    {
      std::size_t at = 0;
      if (estimator == Estimator::kEm) truth[at++] = deltas[di];
      truth[at++] = cfg.truth.beta0;
      for (int j = 0; j < p; ++j) truth[at++] = cfg.truth.beta[j];
      if (estimator == Estimator::kEm) {
        truth[at++] = cfg.truth.gamma0;
        for (int j = 0; j < p; ++j) truth[at++] = cfg.truth.gamma[j];
      }
    }

    BiasMseCell cell;
    cell.delta = deltas[di];
    std::vector<double> err_sum(np, 0.0), err_sq(np, 0.0);
    for (const auto& row : rows) {
      if (row.excluded) {
        ++cell.excluded;
      } else {
        ++cell.used;
        if (row.converged) ++cell.converged;
        for (std::size_t k = 0; k < np; ++k) {
          const double e = row.estimates[k] - truth[k];
          err_sum[k] += e;
          err_sq[k] += e * e;
        }
      }
      report.rows.push_back(row);
    }
    for (std::size_t k = 0; k < np; ++k) {
      ParamStat st;
      st.name = report.param_names[k];
      st.truth = truth[k];
      if (cell.used > 0) {
        st.bias = err_sum[k] / cell.used;
        st.mse = err_sq[k] / cell.used;
      }
      cell.params.push_back(st);
    }
    report.cells.push_back(cell);
  }
  return report;
}

}  // namespace latnet
