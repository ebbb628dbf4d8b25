#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "orr/online_linear.hpp"

namespace orr {

/// Gaussian predictive density N(mean, variance).
struct PredictiveGaussian {
  double mean = 0.0;
  double variance = 1.0;

  PredictiveGaussian() = default;
  PredictiveGaussian(double m, double v) : mean(m), variance(v) {
    if (!(v > 0.0) || !std::isfinite(v) || !std::isfinite(m)) {
      throw ParamError("PredictiveGaussian: need finite mean and variance > 0");
    }
  }
};

/// Log loss -ln p(y).
inline double gaussian_log_loss(const PredictiveGaussian& p, double y) {
  const double r = y - p.mean;
  return 0.5 * std::log(2.0 * std::numbers::pi * p.variance) + r * r / (2.0 * p.variance);
}

inline void require_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParamError("sigma must be finite and > 0");
}

/// Bayesian Ridge Regression predictive distribution N(gamma, sigma^2 (1 + q)).
/// The mean is the Ridge Regression prediction, computed by the same call.
inline PredictiveGaussian brr_predict(const RidgeState& s, const Vec& x, double sigma) {
  require_sigma(sigma);
  const LinearPrediction p = s.predict(x);
  const double s2 = sigma * sigma;
  return {p.gamma, s2 * p.q + s2};
}

/// Cumulative log loss of Bayesian Ridge Regression from a Ridge run's records:
///   (1/2) ln((2 pi sigma^2)^T prod(1 + q_t)) + (1/(2 sigma^2)) sum (y_t - gamma_t)^2 / (1 + q_t).
inline double brr_cumulative_log_loss(std::span<const StepRecord> records, double sigma) {
  require_sigma(sigma);
  const double s2 = sigma * sigma;
  double log_prod = 0.0;
  double weighted = 0.0;
  for (const auto& r : records) {
    log_prod += std::log1p(r.q);
    weighted += r.weighted_sq_loss;
  }
  const auto T = static_cast<double>(records.size());
  return 0.5 * (T * std::log(2.0 * std::numbers::pi * s2) + log_prod) + weighted / (2.0 * s2);
}

/// ln sum exp(v_i), stable. Returns -inf for an empty span.
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double e : v) s += std::exp(e - m);
  return m + std::log(s);
}

/// Gaussian linear expert: predicts N(theta'x, sigma^2).
struct GaussianExpert {
  Vec theta;
  double sigma = 1.0;

  PredictiveGaussian predict(const Vec& x) const {
    detail::require_dim(x.size(), theta.size(), "GaussianExpert");
    return {theta.dot(x), sigma * sigma};
  }
};

/// Bayesian Algorithm over a finite expert set, weights kept in log space.
struct FiniteBAState {
  std::vector<GaussianExpert> experts;
  std::vector<double> log_prior;
  std::vector<double> log_weights;  // log_prior - expert_cum_loss, unnormalized
  std::vector<double> expert_cum_loss;
  double cum_loss = 0.0;
  long steps = 0;

  /// Uniform prior.
  explicit FiniteBAState(std::vector<GaussianExpert> e)
      : FiniteBAState(std::move(e), std::vector<double>{}) {}

  /// Prior masses are normalized; an empty vector means uniform.
  FiniteBAState(std::vector<GaussianExpert> e, std::vector<double> prior_masses)
      : experts(std::move(e)) {
    if (experts.empty()) throw ParamError("FiniteBAState: need at least one expert");
    for (const auto& ex : experts) require_sigma(ex.sigma);
    const std::size_t k = experts.size();
    if (prior_masses.empty()) prior_masses.assign(k, 1.0);
    if (prior_masses.size() != k) throw DimensionError("FiniteBAState: one prior mass per expert");
    double total = 0.0;
    for (double p : prior_masses) {
      if (!(p > 0.0) || !std::isfinite(p)) throw ParamError("FiniteBAState: prior masses must be > 0");
      total += p;
    }
    for (double p : prior_masses) log_prior.push_back(std::log(p / total));
    log_weights = log_prior;
    expert_cum_loss.assign(k, 0.0);
  }
};

/// One round: mixes the experts' densities under the current normalized
/// weights, charges the learner -ln(mixture(y)) and each expert its own log
/// loss. Returns the learner's loss for the round.
inline double finite_ba_step(FiniteBAState& s, std::span<const PredictiveGaussian> expert_preds,
                             double y) {
  if (expert_preds.size() != s.experts.size()) {
    throw DimensionError("finite_ba_step: one prediction per expert required");
  }
  const std::size_t k = s.experts.size();
  std::vector<double> joint(k);
  std::vector<double> losses(k);
  for (std::size_t i = 0; i < k; ++i) {
    losses[i] = gaussian_log_loss(expert_preds[i], y);
    joint[i] = s.log_weights[i] - losses[i];
  }
  const double loss = log_sum_exp(s.log_weights) - log_sum_exp(joint);
  for (std::size_t i = 0; i < k; ++i) {
    s.log_weights[i] = joint[i];
    s.expert_cum_loss[i] += losses[i];
  }
  s.cum_loss += loss;
  ++s.steps;
  return loss;
}

/// Convenience overload: experts predict from their own parameters at x.
inline double finite_ba_step(FiniteBAState& s, const Vec& x, double y) {
  std::vector<PredictiveGaussian> preds;
  preds.reserve(s.experts.size());
  for (const auto& e : s.experts) preds.push_back(e.predict(x));
  return finite_ba_step(s, preds, y);
}

struct LossIdentity {
  double lhs = 0.0;  // learner cumulative loss
  double rhs = 0.0;  // -ln sum prior_i exp(-L_T(i))
};

inline LossIdentity finite_ba_loss_identity(const FiniteBAState& s) {
  std::vector<double> terms(s.experts.size());
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = s.log_prior[i] - s.expert_cum_loss[i];
  return {s.cum_loss, -log_sum_exp(terms)};
}

}  // namespace orr
