#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "orr/bayes_linear.hpp"
#include "orr/kernel.hpp"
#include "orr/online_linear.hpp"
#include "orr/stream.hpp"

namespace orr {

// The two sides of every identity are computed on disjoint paths: the left
// side from the online learner's accumulators, the right side from a batch
// factorization of the whole stream.

inline constexpr double kEqualityTolerance = 1e-6;    // relative, scaled by max(1, |rhs|)
inline constexpr double kInequalityTolerance = 1e-7;  // absolute

enum class Relation { equality, upper_bound };

struct ReportMeta {
  double a = 0.0;
  std::optional<double> sigma;
  long T = 0;
  long n = 0;
  std::optional<std::string> kernel;
  std::optional<double> Y;
  std::optional<double> Z;
  std::optional<double> X;
};

struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  Relation relation = Relation::equality;
  double tolerance = 0.0;
  bool pass = false;
  ReportMeta meta;
};

inline BoundReport make_equality(std::string name, double lhs, double rhs, ReportMeta meta,
                                 double tol = kEqualityTolerance) {
  BoundReport r{std::move(name), lhs, rhs, std::abs(lhs - rhs), Relation::equality, tol, false,
                std::move(meta)};
  r.pass = r.gap <= tol * std::max(1.0, std::abs(rhs));
  return r;
}

inline BoundReport make_upper_bound(std::string name, double lhs, double rhs, ReportMeta meta,
                                    double tol = kInequalityTolerance) {
  BoundReport r{std::move(name), lhs, rhs, rhs - lhs, Relation::upper_bound, tol, false,
                std::move(meta)};
  r.pass = lhs <= rhs + tol;
  return r;
}

namespace detail {

/// Runs f, prefixing any library error with the 1-based step index.
template <class F>
decltype(auto) at_step(std::size_t t, F&& f) {
  const auto where = [t] { return "step " + std::to_string(t + 1) + ": "; };
  try {
    return f();
  } catch (const DimensionError& e) {
    throw DimensionError(where() + e.what());
  } catch (const NumericError& e) {
    throw NumericError(where() + e.what());
  } catch (const ParamError& e) {
    throw ParamError(where() + e.what());
  }
}

inline long stream_dim_or_zero(const Stream& s) {
  return s.empty() ? 0 : static_cast<long>(s.front().x.size());
}

inline ReportMeta linear_meta(const Stream& s, double a) {
  ReportMeta m;
  m.a = a;
  m.T = static_cast<long>(s.size());
  m.n = stream_dim_or_zero(s);
  return m;
}

struct LinearRun {
  double weighted = 0.0;
  double plain = 0.0;
  double clipped = 0.0;
  double log_det = 0.0;
  std::vector<StepRecord> records;
};

inline LinearRun run_ridge(const Stream& s, double a, std::optional<double> clip_y = std::nullopt) {
  if (!(a > 0.0)) throw ParamError("a must be > 0");
  LinearRun run;
  if (s.empty()) return run;
  RidgeState state(a, s.front().x.size());
  run.records.reserve(s.size());
  for (std::size_t t = 0; t < s.size(); ++t) {
    run.records.push_back(at_step(t, [&] { return state.update(s[t].x, s[t].y, clip_y); }));
  }
  run.weighted = state.weighted_loss_acc();
  run.plain = state.plain_loss_acc();
  run.clipped = state.clipped_loss_acc();
  run.log_det = state.log_det_acc();
  return run;
}

struct BatchSide {
  double min_value = 0.0;
  double log_det = 0.0;  // ln det(I + X'X/a), dense
};

inline BatchSide batch_side(const Stream& s, double a) {
  if (s.empty()) return {};
  const auto n = s.front().x.size();
  auto [xs, ys] = stream_matrices(s, n);
  BatchSide b;
  b.min_value = batch_ridge(xs, ys, a).min_value;
  b.log_det = log_det_spd(SymMatrix::Identity(n, n) + xs.transpose() * xs / a);
  return b;
}

inline void require_bounded_outcomes(const Stream& s, double bound_y) {
  if (!(bound_y > 0.0)) throw ParamError("outcome bound Y must be > 0");
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (std::abs(s[t].y) > bound_y) {
      throw InputError("step " + std::to_string(t + 1) + ": |y| = " + format_double(std::abs(s[t].y)) +
                       " exceeds Y = " + format_double(bound_y));
    }
  }
}

inline double gaussian_log_norm(double sigma) {
  return std::log(2.0 * std::numbers::pi * sigma * sigma);
}

}  // namespace detail

/// Weighted square loss of online Ridge Regression against the batch ridge minimum.
inline BoundReport verify_thm1(const Stream& s, double a) {
  const auto run = detail::run_ridge(s, a);
  const auto batch = detail::batch_side(s, a);
  return make_equality("thm1", run.weighted, batch.min_value, detail::linear_meta(s, a));
}

/// The same identity with the left side read off Bayesian Ridge Regression's
/// predictive distributions: (y - mean)^2 / (variance / sigma^2). sigma must cancel.
inline BoundReport verify_thm1_via_brr(const Stream& s, double a, double sigma) {
  require_sigma(sigma);
  double lhs = 0.0;
  if (!s.empty()) {
    RidgeState state(a, s.front().x.size());
    for (const auto& e : s) {
      const PredictiveGaussian p = brr_predict(state, e.x, sigma);
      const double r = e.y - p.mean;
      lhs += r * r / (p.variance / (sigma * sigma));
      state.update(e.x, e.y);
    }
  }
  auto meta = detail::linear_meta(s, a);
  meta.sigma = sigma;
  return make_equality("thm1", lhs, detail::batch_side(s, a).min_value, meta);
}

/// Sum of the per-step log losses of Bayesian Ridge Regression's predictive densities.
inline double brr_stepwise_log_loss(const Stream& s, double a, double sigma) {
  double acc = 0.0;
  if (s.empty()) return acc;
  RidgeState state(a, s.front().x.size());
  for (const auto& e : s) {
    acc += gaussian_log_loss(brr_predict(state, e.x, sigma), e.y);
    state.update(e.x, e.y);
  }
  return acc;
}

/// Log loss of Bayesian Ridge Regression against the best regularized
/// Gaussian linear expert plus (1/2) ln det(I + X'X/a).
inline BoundReport verify_thm2(const Stream& s, double a, double sigma) {
  require_sigma(sigma);
  const auto run = detail::run_ridge(s, a);
  const double lhs = brr_cumulative_log_loss(run.records, sigma);
  const auto batch = detail::batch_side(s, a);
  const auto T = static_cast<double>(s.size());
  // min_theta (L_T(theta) + a/(2 sigma^2)|theta|^2)
  const double best_expert = 0.5 * T * detail::gaussian_log_norm(sigma) +
                             batch.min_value / (2.0 * sigma * sigma);
  auto meta = detail::linear_meta(s, a);
  meta.sigma = sigma;
  return make_equality("thm2", lhs, best_expert + 0.5 * batch.log_det, meta);
}

/// sum ln(1 + q_t) against a dense factorization of I + X'X/a.
inline BoundReport verify_det_identity(const Stream& s, double a, double tol = 1e-7) {
  const auto run = detail::run_ridge(s, a);
  return make_equality("det_identity", run.log_det, detail::batch_side(s, a).log_det,
                       detail::linear_meta(s, a), tol);
}

/// ln det(I + X'X/a) <= n ln(1 + T X^2 / a) when every |x_t|_inf <= X.
inline BoundReport verify_det_bound(const Stream& s, double a, double x_inf) {
  if (!(x_inf > 0.0)) throw ParamError("X must be > 0");
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (s[t].x.lpNorm<Eigen::Infinity>() > x_inf) {
      throw InputError("step " + std::to_string(t + 1) + ": |x|_inf exceeds X = " + format_double(x_inf));
    }
  }
  const auto run = detail::run_ridge(s, a);
  auto meta = detail::linear_meta(s, a);
  meta.X = x_inf;
  const double rhs = static_cast<double>(meta.n) *
                     std::log1p(static_cast<double>(meta.T) * x_inf * x_inf / a);
  return make_upper_bound("det_bound", run.log_det, rhs, meta);
}

/// Clipped Ridge Regression: square loss <= ridge minimum + 4 Y^2 ln det(I + X'X/a).
inline BoundReport verify_cor1(const Stream& s, double a, double bound_y) {
  detail::require_bounded_outcomes(s, bound_y);
  const auto run = detail::run_ridge(s, a, bound_y);
  const auto batch = detail::batch_side(s, a);
  auto meta = detail::linear_meta(s, a);
  meta.Y = bound_y;
  return make_upper_bound("cor1", run.clipped,
                          batch.min_value + 4.0 * bound_y * bound_y * batch.log_det, meta);
}

/// Unclipped square loss <= (1 + Z^2/a) * ridge minimum when every |x_t|_2 <= Z.
/// Without an explicit Z the realized maximum norm is used.
inline BoundReport verify_cor2(const Stream& s, double a, std::optional<double> z = std::nullopt) {
  double max_norm = 0.0;
  for (const auto& e : s) max_norm = std::max(max_norm, e.x.norm());
  if (z) {
    if (!(*z >= 0.0)) throw ParamError("Z must be >= 0");
    if (max_norm > *z) throw InputError("an input has |x|_2 > Z = " + format_double(*z));
  }
  const double bound = z.value_or(max_norm);
  const auto run = detail::run_ridge(s, a);
  const auto batch = detail::batch_side(s, a);
  auto meta = detail::linear_meta(s, a);
  meta.Z = bound;
  return make_upper_bound("cor2", run.plain, (1.0 + bound * bound / a) * batch.min_value, meta);
}

/// The q_t sequence of Ridge Regression and its maximum over the final 10% of
/// steps. Informational: the limit q_t -> 0 cannot be asserted at finite T.
struct TrendReport {
  std::vector<double> q;
  double tail_max = 0.0;
  std::size_t tail_start = 0;  // 0-based index of the first tail step
};

inline TrendReport verify_trend_cor3(const Stream& s, double a) {
  TrendReport tr;
  const auto run = detail::run_ridge(s, a);
  for (const auto& r : run.records) tr.q.push_back(r.q);
  if (tr.q.empty()) return tr;
  const std::size_t tail = std::max<std::size_t>(1, (tr.q.size() + 9) / 10);
  tr.tail_start = tr.q.size() - tail;
  tr.tail_max = *std::max_element(tr.q.begin() + static_cast<long>(tr.tail_start), tr.q.end());
  return tr;
}

// ---------------------------------------------------------------------------
// Kernel guarantees

/// Kernel data: either real-vector inputs with a kernel function, or a
/// precomputed-kernel stream.
struct KernelData {
  std::variant<std::pair<Stream, KernelSpec>, std::vector<KernelRow>> source;

  static KernelData from_inputs(Stream s, KernelSpec spec) {
    return {std::pair<Stream, KernelSpec>{std::move(s), std::move(spec)}};
  }
  static KernelData from_rows(std::vector<KernelRow> rows) { return {std::move(rows)}; }

  std::size_t size() const {
    return std::visit(
        [](const auto& src) -> std::size_t {
          if constexpr (std::is_same_v<std::decay_t<decltype(src)>, std::vector<KernelRow>>) {
            return src.size();
          } else {
            return src.first.size();
          }
        },
        source);
  }

  std::vector<double> outcomes() const {
    std::vector<double> ys;
    if (const auto* rows = std::get_if<std::vector<KernelRow>>(&source)) {
      for (const auto& r : *rows) ys.push_back(r.y);
    } else {
      for (const auto& e : std::get<0>(source).first) ys.push_back(e.y);
    }
    return ys;
  }

  std::string kernel_name() const {
    if (const auto* p = std::get_if<0>(&source)) return p->second.to_string();
    return "precomputed";
  }

  /// Kernel matrix built directly from the data, independent of any learner.
  SymMatrix gram() const {
    if (const auto* rows = std::get_if<std::vector<KernelRow>>(&source)) return kernel_rows_gram(*rows);
    const auto& [s, spec] = std::get<0>(source);
    std::vector<Vec> xs;
    xs.reserve(s.size());
    for (const auto& e : s) xs.push_back(e.x);
    return gram_matrix(spec, xs);
  }

  std::vector<double> diagonal() const {
    std::vector<double> d;
    if (const auto* rows = std::get_if<std::vector<KernelRow>>(&source)) {
      for (const auto& r : *rows) d.push_back(r.kxx);
    } else {
      const auto& [s, spec] = std::get<0>(source);
      for (const auto& e : s) d.push_back(kernel_eval(spec, e.x, e.x));
    }
    return d;
  }
};

/// Runs kernelized Ridge Regression over the data in protocol order.
inline KernelModel run_kernel(const KernelData& data, double a,
                              std::optional<double> clip_y = std::nullopt,
                              std::vector<StepRecord>* records = nullptr,
                              KernelModelOptions opts = {}) {
  if (const auto* rows = std::get_if<std::vector<KernelRow>>(&data.source)) {
    auto m = KernelModel::precomputed(a, opts);
    for (std::size_t t = 0; t < rows->size(); ++t) {
      const auto& r = (*rows)[t];
      auto rec = detail::at_step(t, [&] { return m.update_from_kernel(r.k, r.kxx, r.y, clip_y); });
      if (records) records->push_back(std::move(rec));
    }
    return m;
  }
  const auto& [s, spec] = std::get<0>(data.source);
  KernelModel m(spec, a, opts);
  for (std::size_t t = 0; t < s.size(); ++t) {
    auto rec = detail::at_step(t, [&] { return m.update(s[t].x, s[t].y, clip_y); });
    if (records) records->push_back(std::move(rec));
  }
  return m;
}

namespace detail {

inline ReportMeta kernel_meta(const KernelData& d, double a) {
  ReportMeta m;
  m.a = a;
  m.T = static_cast<long>(d.size());
  if (const auto* p = std::get_if<0>(&d.source)) m.n = stream_dim_or_zero(p->first);
  m.kernel = d.kernel_name();
  return m;
}

inline Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// Weighted square loss of kernelized Ridge Regression against a Y'(aI+K)^{-1}Y.
inline BoundReport verify_thm3(const KernelData& d, double a) {
  const auto model = run_kernel(d, a);
  const double rhs = rkhs_min_value(d.gram(), detail::to_vec(d.outcomes()), a);
  return make_equality("thm3", model.weighted_loss_acc(), rhs, detail::kernel_meta(d, a));
}

/// Log loss of kernelized Bayesian Ridge Regression against the best
/// regularized RKHS expert plus (1/2) ln det(I + K/a).
inline BoundReport verify_thm4(const KernelData& d, double a, double sigma) {
  require_sigma(sigma);
  std::vector<StepRecord> recs;
  run_kernel(d, a, std::nullopt, &recs);
  double lhs = 0.0;
  for (const auto& r : recs) {
    lhs += gaussian_log_loss(PredictiveGaussian(r.gamma, sigma * sigma * r.denom), r.y);
  }
  const SymMatrix g = d.gram();
  const auto T = static_cast<double>(d.size());
  const double best = 0.5 * T * detail::gaussian_log_norm(sigma) +
                      rkhs_min_value(g, detail::to_vec(d.outcomes()), a) / (2.0 * sigma * sigma);
  auto meta = detail::kernel_meta(d, a);
  meta.sigma = sigma;
  return make_equality("thm4", lhs, best + 0.5 * kernel_log_det(g, a), meta);
}

/// Clipped kernelized Ridge Regression: square loss <= RKHS minimum + 4Y^2 ln det(I + K/a).
inline BoundReport verify_cor5(const KernelData& d, double a, double bound_y) {
  if (!(bound_y > 0.0)) throw ParamError("outcome bound Y must be > 0");
  const auto ys = d.outcomes();
  for (std::size_t t = 0; t < ys.size(); ++t) {
    if (std::abs(ys[t]) > bound_y) {
      throw InputError("step " + std::to_string(t + 1) + ": |y| exceeds Y = " + format_double(bound_y));
    }
  }
  const auto model = run_kernel(d, a, bound_y);
  const SymMatrix g = d.gram();
  const double rhs = rkhs_min_value(g, detail::to_vec(ys), a) + 4.0 * bound_y * bound_y * kernel_log_det(g, a);
  auto meta = detail::kernel_meta(d, a);
  meta.Y = bound_y;
  return make_upper_bound("cor5", model.clipped_loss_acc(), rhs, meta);
}

/// ln det(I + K/a) accumulated step by step against a dense factorization.
inline BoundReport verify_kernel_det_identity(const KernelData& d, double a, double tol = 1e-7) {
  const auto model = run_kernel(d, a);
  return make_equality("det_identity", model.log_det_acc(), kernel_log_det(d.gram(), a),
                       detail::kernel_meta(d, a), tol);
}

/// Horizon-tuned regularization a = c_F sqrt(T): clipped square loss
/// <= sum (y_t - f(x_t))^2 + c_F (|f|^2 + 4Y^2) sqrt(T), with f the RKHS
/// minimizer at that a. c_F defaults to sup sqrt K(x,x) when the kernel has
/// a bounded diagonal (rbf); otherwise it must be supplied and cover the data.
inline BoundReport verify_cor5_tuned(const KernelData& d, double bound_y,
                                     std::optional<double> c_f = std::nullopt) {
  if (!c_f) {
    if (const auto* p = std::get_if<0>(&d.source)) c_f = p->second.bounded_diagonal();
    if (!c_f) throw ConfigError("cor5_tuned: kernel has no bounded diagonal; supply c_F");
    c_f = std::sqrt(*c_f);
  }
  if (!(*c_f > 0.0)) throw ParamError("c_F must be > 0");
  for (double kxx : d.diagonal()) {
    if (kxx > *c_f * *c_f * (1.0 + 1e-12)) throw InputError("cor5_tuned: K(x,x) exceeds c_F^2");
  }
  const auto ys = d.outcomes();
  for (double y : ys) {
    if (std::abs(y) > bound_y) throw InputError("cor5_tuned: |y| exceeds Y = " + format_double(bound_y));
  }
  const auto T = static_cast<double>(d.size());
  if (T == 0) throw InputError("cor5_tuned: empty stream");
  const double a = *c_f * std::sqrt(T);

  const auto model = run_kernel(d, a, bound_y);
  const Vec y = detail::to_vec(ys);
  const auto sol = rkhs_solve(d.gram(), y, a);
  const double comparator_loss = (y - sol.fitted).squaredNorm();
  const double rhs = comparator_loss + *c_f * (sol.norm_sq + 4.0 * bound_y * bound_y) * std::sqrt(T);
  auto meta = detail::kernel_meta(d, a);
  meta.Y = bound_y;
  return make_upper_bound("cor5_tuned", model.clipped_loss_acc(), rhs, meta);
}

}  // namespace orr
