#include "latnet/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "latnet/errors.hpp"
#include "latnet/rng.hpp"

namespace latnet {

std::vector<double> predict_proba(const FitResult& fit, const Dataset& data, PredictMode mode,
                                  std::uint64_t seed) {
  data.validate();
  const FullParams& th = fit.params;
  if (th.covariate_count() != data.p()) {
    throw input_error("predict: parameter dimension does not match the data");
  }
  if (fit.weights.size() != static_cast<std::size_t>(data.n())) {
    throw input_error("predict: weight vector length does not match the data");
  }
  if (!fit.converged) {
    std::fprintf(stderr, "latnet: warning: predicting from a non-converged fit\n");
  }
  const auto lp0 = linear_predictor(data.X, th.beta0, th.beta);
  const auto s = neighbor_feature_sum(data.graph, data.X, th.beta);
  const int n = data.n();
  std::vector<double> out(n);
  if (mode == PredictMode::kMarginal) {
    for (int i = 0; i < n; ++i) {
      const double w = fit.weights[i];
      out[i] = w * sigmoid(lp0[i] + th.delta * s[i]) + (1.0 - w) * sigmoid(lp0[i]);
    }
  } else {
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
      const int zeta = rng.bernoulli(fit.weights[i]) ? 1 : 0;
      out[i] = sigmoid(lp0[i] + th.delta * (zeta ? s[i] : 0.0));
    }
  }
  return out;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const std::int8_t> labels) {
  const std::size_t n = scores.size();
  if (labels.size() != n) throw input_error("roc: score and label lengths differ");
  RocCurve roc;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1) {
      ++roc.n_pos;
    } else if (labels[i] == 0) {
      ++roc.n_neg;
    } else {
      throw input_error("roc: labels must be 0 or 1");
    }
  }
  if (roc.n_pos == 0 || roc.n_neg == 0) {
    throw input_error("roc: both classes must be present");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  roc.points.emplace_back(0.0, 0.0);
  double auc = 0.0;
  long tp = 0, fp = 0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1) {
        ++tp;
      } else {
        ++fp;
      }
      ++j;
    }
    const double tpr = static_cast<double>(tp) / roc.n_pos;
    const double fpr = static_cast<double>(fp) / roc.n_neg;
    auc += (fpr - prev_fpr) * 0.5 * (tpr + prev_tpr);
    roc.points.emplace_back(fpr, tpr);
    prev_fpr = fpr;
    prev_tpr = tpr;
    i = j;
  }
  roc.auc = auc;
  return roc;
}

ModelComparison compare_models(const Dataset& data, const FitResult& latent,
                               const NullFit& plain) {
  ModelComparison cmp;
  const auto latent_scores = predict_proba(latent, data, PredictMode::kMarginal);
  const auto plp = linear_predictor(data.X, plain.eta[0],
                                    std::span<const double>(plain.eta).subspan(1));
  std::vector<double> plain_scores(plp.size());
  for (std::size_t i = 0; i < plp.size(); ++i) plain_scores[i] = sigmoid(plp[i]);
  cmp.roc_latent = roc_curve(latent_scores, data.y);
  cmp.roc_plain = roc_curve(plain_scores, data.y);
  cmp.auc_latent = cmp.roc_latent.auc;
  cmp.auc_plain = cmp.roc_plain.auc;
  cmp.auc_diff = cmp.auc_latent - cmp.auc_plain;
  return cmp;
}

}  // namespace latnet
