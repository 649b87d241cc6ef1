#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latnet/em.hpp"
#include "latnet/model.hpp"
#include "latnet/score_test.hpp"

namespace latnet {

enum class CovCase {
  kI,   // x1 ~ Bernoulli(1/2), x2 ~ Uniform(-1, 1)
  kII,  // x1 ~ N(0, 1), x2 ~ N(0, 2)
};

enum class Estimator { kEm, kLogistic };

struct SimConfig {
  CovCase cov_case = CovCase::kI;
  SbmConfig sbm;
  FullParams truth;  // delta overridden per study cell
  // The second covariate in case II is N(0, 2). The 2 is read as a variance
  // by default; set this to read it as a standard deviation instead.
  bool x2_scale_is_sd = false;

  int replicates = 100;
  bool fixed_graph = false;  // one shared graph instead of one per replicate
  int test_B = 1000;
  double alpha = 0.05;
  std::vector<double> grid_levels = {-2, -1, 0, 1, 2};
  EmConfig em;
  std::uint64_t seed = 12345;
  int threads = 1;
};

// Community structure and coefficients used throughout the simulation
// studies: five blocks (500, 500, 400, 400, 200), within-block probabilities
// (0.01, 0.10, 0.05, 0.15, 0.10), between-block 1e-4, beta = (0.5, -1, 1),
// gamma = (0, -1, 1).
SimConfig default_sim_config();

// One synthetic dataset: graph (unless provided), covariates, latent
// susceptibilities, outcomes, in that order, from a single stream.
Dataset generate_case(const SimConfig& cfg, double delta, Rng& rng);
Dataset generate_case(const SimConfig& cfg, double delta, const Graph& graph, Rng& rng);

struct SizePowerRow {
  double delta = 0.0;
  int replicate = 0;
  bool excluded = false;
  double t_n = 0.0;
  double c_alpha = 0.0;
  double p_value = 1.0;
  bool reject = false;
};

struct SizePowerCell {
  double delta = 0.0;
  int used = 0;
  int excluded = 0;
  int rejections = 0;
  double rejection_rate = 0.0;
};

struct SizePowerReport {
  std::vector<SizePowerCell> cells;
  std::vector<SizePowerRow> rows;
};

// Rejection rate of the score test across replicated datasets for each
// delta. Replicates with a failed null fit are excluded and counted.
SizePowerReport size_power_study(const SimConfig& cfg, std::span<const double> deltas);

struct ParamStat {
  std::string name;
  double truth = 0.0;
  double bias = 0.0;
  double mse = 0.0;
};

struct BiasMseRow {
  double delta = 0.0;
  int replicate = 0;
  bool excluded = false;
  bool converged = false;
  int iterations = 0;
  std::vector<double> estimates;
};

struct BiasMseCell {
  double delta = 0.0;
  int used = 0;
  int excluded = 0;
  int converged = 0;
  std::vector<ParamStat> params;
};

struct BiasMseReport {
  Estimator estimator = Estimator::kEm;
  std::vector<std::string> param_names;
  std::vector<BiasMseCell> cells;
  std::vector<BiasMseRow> rows;
};

// Bias and mean squared error of the chosen estimator against the generating
// parameters, per delta. The EM estimator reports (delta, beta, gamma); the
// plain logistic estimator reports (beta0, beta) only.
BiasMseReport bias_mse_study(const SimConfig& cfg, std::span<const double> deltas,
                             Estimator estimator);

}  // namespace latnet
