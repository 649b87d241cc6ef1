#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "latnet/em.hpp"
#include "latnet/logistic.hpp"
#include "latnet/model.hpp"

namespace latnet {

enum class PredictMode {
  kMarginal,  // weights mix the two outcome probabilities (deterministic)
  kSampled,   // susceptibility drawn per node from its posterior weight
};

// Outcome probability per node under a fitted latent model.
std::vector<double> predict_proba(const FitResult& fit, const Dataset& data, PredictMode mode,
                                  std::uint64_t seed = 0);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0) .. (1,1)
  double auc = 0.0;
  int n_pos = 0;
  int n_neg = 0;
};

// Threshold sweep over the unique score values, descending; tied scores move
// as one group. AUC by the trapezoid rule (equals the Mann-Whitney statistic
// with ties counted one half).
RocCurve roc_curve(std::span<const double> scores, std::span<const std::int8_t> labels);

struct ModelComparison {
  double auc_latent = 0.0;
  double auc_plain = 0.0;
  double auc_diff = 0.0;  // latent minus plain
  RocCurve roc_latent;
  RocCurve roc_plain;
};

// In-sample ROC comparison of the latent fit against a plain logistic fit on
// the same data (marginal prediction mode for the latent model).
ModelComparison compare_models(const Dataset& data, const FitResult& latent,
                               const NullFit& plain);

}  // namespace latnet
