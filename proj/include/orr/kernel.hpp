#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>

#include "orr/bayes_linear.hpp"
#include "orr/online_linear.hpp"

namespace orr {

struct LinearKernel {};

struct RbfKernel {
  double gamma = 1.0;
};

struct PolynomialKernel {
  int degree = 2;
  double offset = 1.0;
};

/// Kernel choice with validated parameters.
class KernelSpec {
 public:
  using Kind = std::variant<LinearKernel, RbfKernel, PolynomialKernel>;

  KernelSpec() = default;
  KernelSpec(LinearKernel k) : kind_(k) {}
  KernelSpec(RbfKernel k) : kind_(k) {
    if (!(k.gamma > 0.0) || !std::isfinite(k.gamma)) throw ParamError("rbf: gamma must be > 0");
  }
  KernelSpec(PolynomialKernel k) : kind_(k) {
    if (k.degree < 1) throw ParamError("polynomial: degree must be >= 1");
    if (!(k.offset >= 0.0) || !std::isfinite(k.offset)) {
      throw ParamError("polynomial: offset must be >= 0");
    }
  }

  const Kind& kind() const { return kind_; }

  // sup_x K(x, x) is finite only for rbf, where it equals 1.
  std::optional<double> bounded_diagonal() const {
    if (std::holds_alternative<RbfKernel>(kind_)) return 1.0;
    return std::nullopt;
  }

  std::string to_string() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, LinearKernel>) {
            return "linear";
          } else if constexpr (std::is_same_v<K, RbfKernel>) {
            return "rbf:gamma=" + std::to_string(k.gamma);
          } else {
            return "poly:degree=" + std::to_string(k.degree) + ",offset=" + std::to_string(k.offset);
          }
        },
        kind_);
  }

 private:
  Kind kind_ = LinearKernel{};
};

inline double kernel_eval(const KernelSpec& spec, const Vec& x, const Vec& z) {
  detail::require_dim(z.size(), x.size(), "kernel_eval");
  const double v = std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, LinearKernel>) {
          return x.dot(z);
        } else if constexpr (std::is_same_v<K, RbfKernel>) {
          return std::exp(-k.gamma * (x - z).squaredNorm());
        } else {
          return std::pow(x.dot(z) + k.offset, k.degree);
        }
      },
      spec.kind());
  if (!std::isfinite(v)) throw NumericError("kernel_eval: non-finite kernel value");
  return v;
}

inline SymMatrix gram_matrix(const KernelSpec& spec, std::span<const Vec> inputs) {
  const auto t = static_cast<Eigen::Index>(inputs.size());
  SymMatrix k(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = kernel_eval(spec, inputs[i], inputs[j]);
    }
  }
  return k;
}

struct KernelPrediction {
  double gamma = 0.0;
  double d = 0.0;  // (K(x,x) - k'(aI+K)^{-1}k) / a
};

struct KernelModelOptions {
  // Full refactorization of (aI+K)^{-1} every this many steps; 0 disables.
  int refactor_every = 256;
  long max_steps = 100000;
};

/// Kernelized Ridge Regression. Keeps (aI + K_{t-1})^{-1} and grows it one
/// row/column per step through the Schur complement a + K(x,x) - k'(aI+K)^{-1}k.
///
/// A model built with `precomputed` stores no inputs; it is driven by kernel
/// rows (k_t, K(x_t,x_t)) instead, which supports arbitrary input sets.
class KernelModel {
 public:
  KernelModel(KernelSpec spec, double a, KernelModelOptions opts = {})
      : spec_(std::move(spec)), a_(a), opts_(opts) {
    validate();
  }

  static KernelModel precomputed(double a, KernelModelOptions opts = {}) {
    return KernelModel(PrecomputedTag{}, a, opts);
  }

  /// Kernel evaluations of x against every stored input.
  Vec kernel_vector(const Vec& x) const {
    const KernelSpec& s = require_spec();
    Vec k(size());
    for (Eigen::Index i = 0; i < size(); ++i) k(i) = kernel_eval(s, inputs_[i], x);
    return k;
  }

  KernelPrediction predict(const Vec& x) const {
    const KernelSpec& s = require_spec();
    return predict_from_kernel(kernel_vector(x), kernel_eval(s, x, x));
  }

  KernelPrediction predict_from_kernel(const Vec& k, double kxx) const {
    detail::require_dim(k.size(), size(), "kernel predict");
    if (!k.allFinite() || !std::isfinite(kxx)) throw NumericError("kernel predict: non-finite kernel value");
    if (size() == 0) return {0.0, kxx / a_};
    const Vec u = g_inv_ * k;
    double d = (kxx - k.dot(u)) / a_;
    if (d < 0.0) {
      // Rounding can leave a tiny negative value for a repeated input.
      if (d < -1e-9 * std::max(1.0, std::abs(kxx) / a_)) {
        throw NumericError("kernel predict: negative posterior variance, kernel not PSD");
      }
      d = 0.0;
    }
    return {ys_.dot(u), d};
  }

  StepRecord update(const Vec& x, double y, std::optional<double> clip_y = std::nullopt) {
    const KernelSpec& s = require_spec();
    StepRecord rec = update_from_kernel(kernel_vector(x), kernel_eval(s, x, x), y, clip_y);
    rec.x = x;
    inputs_.push_back(x);
    return rec;
  }

  /// Predicts with the given kernel row, then absorbs the outcome.
  StepRecord update_from_kernel(const Vec& k, double kxx, double y,
                                std::optional<double> clip_y = std::nullopt) {
    if (!std::isfinite(y)) throw NumericError("kernel update: non-finite outcome");
    if (size() >= opts_.max_steps) throw ParamError("kernel update: max_steps exceeded");
    const KernelPrediction p = predict_from_kernel(k, kxx);

    StepRecord rec;
    rec.y = y;
    rec.gamma = p.gamma;
    rec.q = p.d;
    rec.denom = 1.0 + p.d;
    rec.sq_loss = (y - p.gamma) * (y - p.gamma);
    rec.weighted_sq_loss = rec.sq_loss / rec.denom;
    if (clip_y) {
      rec.gamma_clipped = clip(p.gamma, *clip_y);
      const double r = y - *rec.gamma_clipped;
      clipped_loss_acc_ += r * r;
    }

    grow(k, kxx);
    ys_.conservativeResize(size() + 1);
    ys_(size() - 1) = y;

    if (opts_.refactor_every > 0 && size() % opts_.refactor_every == 0) refactor();

    log_det_acc_ += std::log1p(p.d);
    weighted_loss_acc_ += rec.weighted_sq_loss;
    plain_loss_acc_ += rec.sq_loss;
    return rec;
  }

  /// Recomputes (aI + K)^{-1} from the stored kernel matrix.
  void refactor() {
    if (size() == 0) return;
    const Eigen::Index t = size();
    Eigen::LLT<SymMatrix> llt(a_ * SymMatrix::Identity(t, t) + gram_);
    if (llt.info() != Eigen::Success) throw NumericError("kernel refactor: factorization failed");
    g_inv_ = llt.solve(SymMatrix::Identity(t, t));
    detail::symmetrize(g_inv_);
  }

  const std::optional<KernelSpec>& spec() const { return spec_; }
  double a() const { return a_; }
  Eigen::Index size() const { return ys_.size(); }
  const std::vector<Vec>& inputs() const { return inputs_; }
  const Vec& ys() const { return ys_; }
  const SymMatrix& gram() const { return gram_; }
  const SymMatrix& g_inv() const { return g_inv_; }
  double log_det_acc() const { return log_det_acc_; }
  double weighted_loss_acc() const { return weighted_loss_acc_; }
  double plain_loss_acc() const { return plain_loss_acc_; }
  double clipped_loss_acc() const { return clipped_loss_acc_; }

 private:
  struct PrecomputedTag {};

  KernelModel(PrecomputedTag, double a, KernelModelOptions opts) : a_(a), opts_(opts) {
    validate();
  }

  void validate() const {
    if (!(a_ > 0.0) || !std::isfinite(a_)) throw ParamError("kernel model: a must be finite and > 0");
    if (opts_.max_steps < 1) throw ParamError("kernel model: max_steps must be >= 1");
  }

  const KernelSpec& require_spec() const {
    if (!spec_) throw ConfigError("kernel model: precomputed model has no kernel function");
    return *spec_;
  }

  void grow(const Vec& k, double kxx) {
    const Eigen::Index t = size();
    const Vec u = g_inv_ * k;
    const double schur = a_ + kxx - k.dot(u);
    if (!(schur > 0.0)) throw NumericError("kernel update: non-positive Schur complement");

    SymMatrix g(t + 1, t + 1);
    g.topLeftCorner(t, t) = g_inv_ + (u * u.transpose()) / schur;
    g.topRightCorner(t, 1) = -u / schur;
    g.bottomLeftCorner(1, t) = -u.transpose() / schur;
    g(t, t) = 1.0 / schur;
    detail::symmetrize(g);
    g_inv_ = std::move(g);

    gram_.conservativeResize(t + 1, t + 1);
    gram_.topRightCorner(t, 1) = k;
    gram_.bottomLeftCorner(1, t) = k.transpose();
    gram_(t, t) = kxx;
  }

  std::optional<KernelSpec> spec_;
  double a_;
  KernelModelOptions opts_;
  std::vector<Vec> inputs_;
  Vec ys_ = Vec(0);
  SymMatrix gram_ = SymMatrix(0, 0);
  SymMatrix g_inv_ = SymMatrix(0, 0);
  double log_det_acc_ = 0.0;
  double weighted_loss_acc_ = 0.0;
  double plain_loss_acc_ = 0.0;
  double clipped_loss_acc_ = 0.0;
};

/// Kernelized Bayesian Ridge Regression: N(gamma, sigma^2 (1 + d)).
inline PredictiveGaussian kbrr_predict(const KernelModel& m, const Vec& x, double sigma) {
  require_sigma(sigma);
  const KernelPrediction p = m.predict(x);
  return {p.gamma, sigma * sigma * (1.0 + p.d)};
}

/// Minimizer of sum (y_t - f(x_t))^2 + a |f|^2 over the RKHS, written as
/// f = sum c_i k_{x_i} with c = (aI + K)^{-1} Y.
struct RkhsSolution {
  Vec coeffs;
  Vec fitted;          // f(x_t) = (K c)_t
  double norm_sq = 0;  // |f|^2 = c'Kc
  double min_value = 0;
};

inline RkhsSolution rkhs_solve(const SymMatrix& gram, const Vec& ys, double a) {
  if (!(a > 0.0)) throw ParamError("rkhs_solve: a must be > 0");
  detail::require_dim(gram.rows(), ys.size(), "rkhs_solve");
  detail::require_finite(gram, "rkhs_solve");
  const Eigen::Index t = ys.size();
  RkhsSolution sol;
  if (t == 0) {
    sol.coeffs = sol.fitted = Vec(0);
    return sol;
  }
  Eigen::LDLT<SymMatrix> ldlt(a * SymMatrix::Identity(t, t) + gram);
  if (ldlt.info() != Eigen::Success) throw NumericError("rkhs_solve: factorization failed");
  sol.coeffs = ldlt.solve(ys);
  sol.fitted = gram * sol.coeffs;
  sol.norm_sq = sol.coeffs.dot(sol.fitted);
  // a Y'(aI+K)^{-1}Y; equals |Y - Kc|^2 + a c'Kc at the optimum.
  sol.min_value = a * ys.dot(sol.coeffs);
  return sol;
}

inline double rkhs_min_value(const SymMatrix& gram, const Vec& ys, double a) {
  return rkhs_solve(gram, ys, a).min_value;
}

inline double rkhs_min_value(const KernelSpec& spec, std::span<const Vec> inputs, const Vec& ys,
                             double a) {
  detail::require_dim(ys.size(), static_cast<Eigen::Index>(inputs.size()), "rkhs_min_value");
  return rkhs_min_value(gram_matrix(spec, inputs), ys, a);
}

/// ln det(I + K/a) by dense Cholesky.
inline double kernel_log_det(const SymMatrix& gram, double a) {
  if (gram.rows() == 0) return 0.0;
  return log_det_spd(SymMatrix::Identity(gram.rows(), gram.cols()) + gram / a);
}

}  // namespace orr
