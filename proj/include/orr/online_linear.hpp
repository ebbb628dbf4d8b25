#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "orr/linalg.hpp"

namespace orr {

/// One step of the online protocol, recorded after the outcome is revealed.
///
/// `q` is the quadratic form x'A_{t-1}^{-1}x for the linear learners and the
/// scaled posterior variance (K(x,x) - k'(aI+K)^{-1}k)/a for kernel learners;
/// both enter the loss identities through the denominator 1 + q.
struct StepRecord {
  Vec x;
  double y = 0.0;
  double gamma = 0.0;
  std::optional<double> gamma_clipped;
  double q = 0.0;
  double denom = 1.0;
  double sq_loss = 0.0;
  double weighted_sq_loss = 0.0;
};

/// Clips a prediction to [-bound_y, bound_y].
inline double clip(double gamma, double bound_y) {
  if (!(bound_y > 0.0)) throw ParamError("clip: bound must be > 0");
  return std::clamp(gamma, -bound_y, bound_y);
}

struct LinearPrediction {
  double gamma = 0.0;
  double q = 0.0;
};

/// Online Ridge Regression state: A_{t-1}^{-1} (kept via Sherman-Morrison),
/// b_{t-1} = sum y x, and running loss/log-det accumulators.
class RidgeState {
 public:
  RidgeState(double a, Eigen::Index dim) : a_(a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ParamError("ridge: a must be finite and > 0");
    if (dim < 1) throw ParamError("ridge: dim must be >= 1");
    a_inv_ = SymMatrix::Identity(dim, dim) / a;
    b_ = Vec::Zero(dim);
  }

  /// gamma = b'A^{-1}x and q = x'A^{-1}x. Does not modify the state.
  LinearPrediction predict(const Vec& x) const {
    detail::require_dim(x.size(), dim(), "ridge predict");
    detail::require_finite(x, "ridge predict");
    const Vec ax = a_inv_ * x;
    return {b_.dot(ax), std::max(0.0, x.dot(ax))};
  }

  /// Forward-looking prediction b'(A + xx')^{-1}x; the state is unchanged.
  double vaw_predict(const Vec& x) const {
    detail::require_dim(x.size(), dim(), "vaw predict");
    const auto step = sherman_morrison_update(a_inv_, x);
    return b_.dot(step.inverse * x);
  }

  /// Predicts for x, then absorbs (x, y). The record carries the prediction
  /// made before the update, so the protocol order cannot be broken.
  ///
  /// Clipping touches only the reported prediction; the learner itself always
  /// uses the unclipped value.
  StepRecord update(const Vec& x, double y, std::optional<double> clip_y = std::nullopt) {
    if (!std::isfinite(y)) throw NumericError("ridge update: non-finite outcome");
    const LinearPrediction p = predict(x);

    StepRecord rec;
    rec.x = x;
    rec.y = y;
    rec.gamma = p.gamma;
    rec.q = p.q;
    rec.denom = 1.0 + p.q;
    rec.sq_loss = (y - p.gamma) * (y - p.gamma);
    rec.weighted_sq_loss = rec.sq_loss / rec.denom;
    if (clip_y) {
      rec.gamma_clipped = clip(p.gamma, *clip_y);
      const double r = y - *rec.gamma_clipped;
      clipped_loss_acc_ += r * r;
    }

    a_inv_ = sherman_morrison_update(a_inv_, x).inverse;
    b_ += y * x;
    ++t_;
    log_det_acc_ += std::log1p(p.q);
    weighted_loss_acc_ += rec.weighted_sq_loss;
    plain_loss_acc_ += rec.sq_loss;
    return rec;
  }

  double a() const { return a_; }
  Eigen::Index dim() const { return b_.size(); }
  const SymMatrix& a_inv() const { return a_inv_; }
  const Vec& b() const { return b_; }
  long steps() const { return t_; }
  double log_det_acc() const { return log_det_acc_; }
  double weighted_loss_acc() const { return weighted_loss_acc_; }
  double plain_loss_acc() const { return plain_loss_acc_; }
  double clipped_loss_acc() const { return clipped_loss_acc_; }

 private:
  double a_;
  SymMatrix a_inv_;
  Vec b_;
  long t_ = 0;
  double log_det_acc_ = 0.0;
  double weighted_loss_acc_ = 0.0;
  double plain_loss_acc_ = 0.0;
  double clipped_loss_acc_ = 0.0;
};

}  // namespace orr
