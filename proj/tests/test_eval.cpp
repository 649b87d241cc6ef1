#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "latnet/em.hpp"
#include "latnet/errors.hpp"
#include "latnet/evaluation.hpp"
#include "latnet/graph.hpp"
#include "latnet/logistic.hpp"
#include "latnet/rng.hpp"
#include "oracles.hpp"

using namespace latnet;

namespace {

Dataset make_latent_data(int n, double delta, std::uint64_t seed) {
  Rng rng(seed);
  SbmConfig sbm;
  sbm.block_sizes = {n / 2, n - n / 2};
  sbm.connect_prob = Matrix(2, 2, 0.01);
  sbm.connect_prob(0, 0) = 0.08;
  sbm.connect_prob(1, 1) = 0.08;
  Dataset d;
  d.graph = sbm_generate(sbm, rng);
  d.X = Matrix(n, 2);
  for (int i = 0; i < n; ++i) {
    d.X(i, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    d.X(i, 1) = rng.uniform(-1.0, 1.0);
  }
  const std::vector<double> beta = {-1.0, 1.0};
  const auto s = neighbor_feature_sum(d.graph, d.X, beta);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double prior = oracle::sigmoid_ref(-d.X(i, 0) + d.X(i, 1));
    const int zeta = rng.bernoulli(prior) ? 1 : 0;
    const double lp = 0.5 - d.X(i, 0) + d.X(i, 1) + delta * zeta * s[i];
    d.y[i] = rng.bernoulli(oracle::sigmoid_ref(lp)) ? 1 : 0;
  }
  return d;
}

}  // namespace

TEST_CASE("perfect and random scores bracket the auc") {
  const std::vector<double> scores = {0.9, 0.8, 0.7, 0.3, 0.2, 0.1};
  const std::vector<std::int8_t> perfect = {1, 1, 1, 0, 0, 0};
  CHECK(roc_curve(scores, perfect).auc == doctest::Approx(1.0));
  const std::vector<std::int8_t> inverted = {0, 0, 0, 1, 1, 1};
  CHECK(roc_curve(scores, inverted).auc == doctest::Approx(0.0));
  const std::vector<double> flat(6, 0.5);
  CHECK(roc_curve(flat, perfect).auc == doctest::Approx(0.5));
}

TEST_CASE("auc equals the pair counting statistic") {
  Rng rng(808);
  for (int rep = 0; rep < 8; ++rep) {
    const int n = 80;
    std::vector<double> scores(n);
    std::vector<std::int8_t> labels(n);
    for (int i = 0; i < n; ++i) {
      // quantized scores force plenty of ties
      scores[i] = std::round(rng.uniform(0.0, 1.0) * 8.0) / 8.0;
      labels[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    if (std::count(labels.begin(), labels.end(), 1) == 0) labels[0] = 1;
    if (std::count(labels.begin(), labels.end(), 0) == 0) labels[1] = 0;
    const RocCurve roc = roc_curve(scores, labels);
    CHECK(roc.auc == doctest::Approx(oracle::mann_whitney_auc(scores, labels)).epsilon(1e-12));
  }
}

TEST_CASE("roc endpoints and monotonicity") {
  Rng rng(809);
  const int n = 60;
  std::vector<double> scores(n);
  std::vector<std::int8_t> labels(n);
  for (int i = 0; i < n; ++i) {
    scores[i] = rng.normal();
    labels[i] = rng.bernoulli(0.5) ? 1 : 0;
  }
  labels[0] = 1;
  labels[1] = 0;
  const RocCurve roc = roc_curve(scores, labels);
  REQUIRE(roc.points.size() >= 2u);
  CHECK(roc.points.front().first == 0.0);
  CHECK(roc.points.front().second == 0.0);
  CHECK(roc.points.back().first == doctest::Approx(1.0));
  CHECK(roc.points.back().second == doctest::Approx(1.0));
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    CHECK(roc.points[i].first >= roc.points[i - 1].first);
    CHECK(roc.points[i].second >= roc.points[i - 1].second);
  }
}

TEST_CASE("auc is invariant under monotone score transforms") {
  Rng rng(810);
  const int n = 70;
  std::vector<double> scores(n), warped(n);
  std::vector<std::int8_t> labels(n);
  for (int i = 0; i < n; ++i) {
    scores[i] = rng.uniform(-2.0, 2.0);
    warped[i] = std::exp(0.7 * scores[i]) + 3.0;
    labels[i] = rng.bernoulli(0.5) ? 1 : 0;
  }
  labels[0] = 1;
  labels[1] = 0;
  CHECK(roc_curve(scores, labels).auc == doctest::Approx(roc_curve(warped, labels).auc));
}

TEST_CASE("roc input validation") {
  const std::vector<double> s = {0.1, 0.2};
  const std::vector<std::int8_t> ones = {1, 1};
  CHECK_THROWS_AS((void)roc_curve(s, ones), input_error);
  const std::vector<std::int8_t> bad = {1, 2};
  CHECK_THROWS_AS((void)roc_curve(s, bad), input_error);
  const std::vector<std::int8_t> short_labels = {1};
  CHECK_THROWS_AS((void)roc_curve(s, short_labels), input_error);
}

TEST_CASE("marginal prediction mixes the two outcome curves") {
  const Dataset d = make_latent_data(200, 0.8, 900);
  const FitResult fit = fit_em(d, EmConfig{});
  const auto prob = predict_proba(fit, d, PredictMode::kMarginal);
  const auto s = neighbor_feature_sum(d.graph, d.X, fit.params.beta);
  REQUIRE(prob.size() == 200u);
  for (int i = 0; i < 200; ++i) {
    const double base = fit.params.beta0 + fit.params.beta[0] * d.X(i, 0) +
                        fit.params.beta[1] * d.X(i, 1);
    const double want = fit.weights[i] * oracle::sigmoid_ref(base + fit.params.delta * s[i]) +
                        (1.0 - fit.weights[i]) * oracle::sigmoid_ref(base);
    CHECK(prob[i] == doctest::Approx(want).epsilon(1e-12));
    CHECK(prob[i] >= 0.0);
    CHECK(prob[i] <= 1.0);
  }
}

TEST_CASE("sampled prediction is seed deterministic and stays on the two curves") {
  const Dataset d = make_latent_data(150, 0.8, 901);
  const FitResult fit = fit_em(d, EmConfig{});
  const auto a = predict_proba(fit, d, PredictMode::kSampled, 5);
  const auto b = predict_proba(fit, d, PredictMode::kSampled, 5);
  const auto c = predict_proba(fit, d, PredictMode::kSampled, 6);
  REQUIRE(a.size() == b.size());
  bool same = true, differs = false;
  const auto s = neighbor_feature_sum(d.graph, d.X, fit.params.beta);
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a[i] == b[i];
    differs = differs || a[i] != c[i];
    const double base = fit.params.beta0 + fit.params.beta[0] * d.X(i, 0) +
                        fit.params.beta[1] * d.X(i, 1);
    const double on = oracle::sigmoid_ref(base + fit.params.delta * s[i]);
    const double off = oracle::sigmoid_ref(base);
    const bool on_curve = std::fabs(a[i] - on) < 1e-12 || std::fabs(a[i] - off) < 1e-12;
    CHECK(on_curve);
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("prediction validates the fit against the data") {
  const Dataset d = make_latent_data(50, 0.5, 902);
  FitResult fit = fit_em(d, EmConfig{});
  fit.weights.pop_back();
  CHECK_THROWS_AS((void)predict_proba(fit, d, PredictMode::kMarginal), input_error);
}

TEST_CASE("model comparison wires both score vectors through the same labels") {
  const Dataset d = make_latent_data(250, 1.0, 903);
  const FitResult latent = fit_em(d, EmConfig{});
  const NullFit plain = fit_logistic(d.X, d.y);
  const ModelComparison cmp = compare_models(d, latent, plain);
  CHECK(cmp.auc_latent == doctest::Approx(cmp.roc_latent.auc));
  CHECK(cmp.auc_plain == doctest::Approx(cmp.roc_plain.auc));
  CHECK(cmp.auc_diff == doctest::Approx(cmp.auc_latent - cmp.auc_plain));
  CHECK(cmp.roc_latent.n_pos == cmp.roc_plain.n_pos);
  CHECK(cmp.roc_latent.n_neg == cmp.roc_plain.n_neg);
  // the plain curve must reproduce a direct logistic score sweep
  std::vector<double> plain_scores(250);
  for (int i = 0; i < 250; ++i) {
    plain_scores[i] = oracle::sigmoid_ref(plain.eta[0] + plain.eta[1] * d.X(i, 0) +
                                          plain.eta[2] * d.X(i, 1));
  }
  CHECK(cmp.auc_plain ==
        doctest::Approx(oracle::mann_whitney_auc(plain_scores, d.y)).epsilon(1e-12));
}
