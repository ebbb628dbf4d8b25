#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "orr/bayes_linear.hpp"
#include "orr/verifier.hpp"

namespace orr {
namespace {

constexpr double kPi = std::numbers::pi;

Vec v1(double x) { return Vec::Constant(1, x); }

TEST(GaussianLogLoss, Examples) {
  EXPECT_NEAR(gaussian_log_loss({0, 1}, 0), 0.5 * std::log(2 * kPi), 1e-15);
  EXPECT_NEAR(gaussian_log_loss({0, 2}, 1), 0.5 * std::log(4 * kPi) + 0.25, 1e-15);
  EXPECT_NEAR(gaussian_log_loss({3, 1}, 3), 0.5 * std::log(2 * kPi), 1e-15);
}

TEST(PredictiveGaussian, RejectsNonPositiveVariance) {
  EXPECT_THROW(PredictiveGaussian(0, 0), ParamError);
  EXPECT_THROW(PredictiveGaussian(0, -1), ParamError);
}

TEST(BrrPredict, Examples) {
  RidgeState s(1.0, 1);
  auto p = brr_predict(s, v1(1), 1.0);
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_EQ(p.variance, 2.0);
  s.update(v1(1), 1.0);
  p = brr_predict(s, v1(1), 1.0);
  EXPECT_DOUBLE_EQ(p.mean, 0.5);
  EXPECT_DOUBLE_EQ(p.variance, 1.5);
  p = brr_predict(s, v1(0), 2.0);
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_EQ(p.variance, 4.0);
  EXPECT_THROW(brr_predict(s, v1(1), 0.0), ParamError);
}

TEST(BrrPredict, MeanIsRidgePredictionBitwise) {
  std::mt19937_64 rng(4);
  const auto s = oracle::random_stream(rng, 7, 200);
  RidgeState st(0.3, 7);
  for (const auto& e : s) {
    EXPECT_EQ(brr_predict(st, e.x, 1.7).mean, st.predict(e.x).gamma);
    st.update(e.x, e.y);
  }
}

TEST(BrrCumulativeLogLoss, Examples) {
  EXPECT_EQ(brr_cumulative_log_loss(std::vector<StepRecord>{}, 1.0), 0.0);

  RidgeState s(1.0, 1);
  std::vector<StepRecord> recs{s.update(v1(1), 1.0)};
  EXPECT_NEAR(brr_cumulative_log_loss(recs, 1.0), 0.5 * std::log(4 * kPi) + 0.25, 1e-15);
  // Frozen: 30-digit value of (1/2) ln(4 pi) + 1/4.
  EXPECT_NEAR(brr_cumulative_log_loss(recs, 1.0), 1.515512123484645396, 1e-15);

  RidgeState s2(1.0, 1);
  std::vector<StepRecord> two;
  double stepwise = 0.0;
  for (int t = 0; t < 2; ++t) {
    stepwise += gaussian_log_loss(brr_predict(s2, v1(1), 1.0), 1.0);
    two.push_back(s2.update(v1(1), 1.0));
  }
  EXPECT_NEAR(brr_cumulative_log_loss(two, 1.0), stepwise, 1e-12);
  EXPECT_THROW(brr_cumulative_log_loss(recs, -1.0), ParamError);
}

TEST(BrrCumulativeLogLoss, MatchesStepwiseSum) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 10;
    const auto s = oracle::random_stream(rng, n, 400);
    const double sigma = std::vector<double>{0.5, 1, 2}[trial % 3];
    RidgeState st(1.0, n);
    std::vector<StepRecord> recs;
    double stepwise = 0.0;
    for (const auto& e : s) {
      stepwise += gaussian_log_loss(brr_predict(st, e.x, sigma), e.y);
      recs.push_back(st.update(e.x, e.y));
    }
    EXPECT_NEAR(brr_cumulative_log_loss(recs, sigma), stepwise, 1e-9);
  }
}

TEST(LogLossIdentity, MatchesGaussianIntegralRoute) {
  // L_T = -ln of the prior-weighted integral of exp(-L_T(theta)); with the
  // N(0, sigma^2/a I) prior the integrand is exp(-W(theta)) for a quadratic W.
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 1 + trial % 5;
    const int T = 5 + trial * 10;
    const double a = std::vector<double>{0.1, 1, 10}[trial % 3];
    const double sigma = std::vector<double>{0.5, 1, 2}[trial % 3];
    const auto s = oracle::random_stream(rng, n, T);
    auto [xs, ys] = stream_matrices(s, n);
    const double s2 = sigma * sigma;
    const SymMatrix A = (a * SymMatrix::Identity(n, n) + xs.transpose() * xs) / (2 * s2);
    const Vec b = -xs.transpose() * ys / s2;
    const double c = ys.squaredNorm() / (2 * s2);
    const double log_int = gaussian_quadratic_integral(A, b, c);
    const double via_integral = 0.5 * T * std::log(2 * kPi * s2) -
                                0.5 * n * std::log(a / (2 * s2 * kPi)) - log_int;
    const auto rep = verify_thm2(s, a, sigma);
    EXPECT_NEAR(rep.lhs, via_integral, 1e-8 * std::max(1.0, std::abs(via_integral)));
  }
}

TEST(LogLossIdentity, SimplifiedBound) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 6;
    const int T = 50 + 20 * trial;
    const double a = std::vector<double>{0.1, 1, 10}[trial % 3];
    const auto s = oracle::random_stream(rng, n, T, 1.0);
    const auto rep = verify_thm2(s, a, 1.0);
    const double regret = rep.lhs - (rep.rhs - 0.5 * verify_det_identity(s, a).rhs);
    EXPECT_LE(regret, 0.5 * n * std::log1p(T * 1.0 / a) + 1e-7);
  }
}

TEST(FiniteBA, IdenticalExpertsLearnerLossEqualsExpertLoss) {
  std::vector<GaussianExpert> ex{{v1(0.5), 1.0}, {v1(0.5), 1.0}};
  FiniteBAState s(ex, {0.2, 0.8});
  const PredictiveGaussian p(0.7, 2.0);
  std::vector<PredictiveGaussian> preds{p, p};
  const double loss = finite_ba_step(s, preds, 1.3);
  EXPECT_NEAR(loss, gaussian_log_loss(p, 1.3), 1e-14);
}

TEST(FiniteBA, TwoExpertMixtureByHand) {
  std::vector<GaussianExpert> ex{{v1(0), 1.0}, {v1(1), 1.0}};
  FiniteBAState s(ex);
  // Experts N(0,1) and N(1,1) at x = 1, y = 0. Frozen from a 30-digit evaluation
  // of -ln((phi(0) + phi(1)) / 2).
  const double loss = finite_ba_step(s, v1(1), 0.0);
  EXPECT_NEAR(loss, 1.138008729584511370, 1e-14);
  const auto phi = [](double y) { return std::exp(-y * y / 2) / std::sqrt(2 * kPi); };
  EXPECT_NEAR(loss, -std::log((phi(0) + phi(1)) / 2), 1e-14);
}

TEST(FiniteBA, SingleExpert) {
  FiniteBAState s({{v1(0.3), 0.8}});
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 20; ++t) {
    const double x = nd(rng), y = nd(rng);
    const double l = finite_ba_step(s, v1(x), y);
    EXPECT_NEAR(l, gaussian_log_loss(s.experts[0].predict(v1(x)), y), 1e-12);
  }
  const auto id = finite_ba_loss_identity(s);
  EXPECT_NEAR(id.lhs, s.expert_cum_loss[0], 1e-10);
  EXPECT_NEAR(id.rhs, s.expert_cum_loss[0], 1e-10);
}

TEST(FiniteBA, ZeroSteps) {
  FiniteBAState s({{v1(0), 1.0}, {v1(2), 3.0}});
  const auto id = finite_ba_loss_identity(s);
  EXPECT_EQ(id.lhs, 0.0);
  EXPECT_NEAR(id.rhs, 0.0, 1e-15);
}

TEST(FiniteBA, MismatchedPredictions) {
  FiniteBAState s({{v1(0), 1.0}, {v1(2), 3.0}});
  std::vector<PredictiveGaussian> one{{0.0, 1.0}};
  EXPECT_THROW(finite_ba_step(s, one, 0.0), DimensionError);
  EXPECT_THROW(FiniteBAState({{v1(0), 1.0}}, {0.5, 0.5}), DimensionError);
}

TEST(FiniteBA, LossIdentityRandom) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 4;
    std::vector<GaussianExpert> ex;
    std::vector<double> prior;
    for (int k = 0; k < 5; ++k) {
      ex.push_back({oracle::random_vec(rng, n), 0.3 + u(rng)});
      prior.push_back(u(rng));
    }
    FiniteBAState s(ex, prior);
    const auto stream = oracle::random_stream(rng, n, 50);
    for (const auto& e : stream) finite_ba_step(s, e.x, e.y);
    const auto id = finite_ba_loss_identity(s);
    EXPECT_LE(std::abs(id.lhs - id.rhs), 1e-9);
  }
}

TEST(FiniteBA, StableWhenWeightsUnderflow) {
  // Hundreds of steps drive exp(-L_T) far below the double range.
  FiniteBAState s({{v1(0), 0.1}, {v1(5), 0.1}});
  for (int t = 0; t < 500; ++t) finite_ba_step(s, v1(1), 3.0);
  const auto id = finite_ba_loss_identity(s);
  EXPECT_TRUE(std::isfinite(id.lhs));
  EXPECT_GT(id.lhs, 1e4);
  EXPECT_LE(std::abs(id.lhs - id.rhs), 1e-9 * id.lhs);
}

}  // namespace
}  // namespace orr
