#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "orr/errors.hpp"

namespace orr {

using Vec = Eigen::VectorXd;
// Dense symmetric matrix. Symmetry is maintained by the operations below,
// not by the type.
using SymMatrix = Eigen::MatrixXd;

namespace detail {

inline void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite entry");
  }
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(got) +
                         ", expected " + std::to_string(want));
  }
}

inline void symmetrize(SymMatrix& m) {
  m = (0.5 * (m + m.transpose())).eval();
}

}  // namespace detail

struct RankOneResult {
  SymMatrix inverse;
  double q = 0.0;  // x' a_inv x, evaluated before the update
};

/// Given a_inv = A^{-1}, returns (A + x x')^{-1} and q = x' A^{-1} x.
///
/// x = 0 is legal and leaves the inverse unchanged.
inline RankOneResult sherman_morrison_update(const SymMatrix& a_inv, const Vec& x) {
  detail::require_dim(a_inv.cols(), a_inv.rows(), "sherman_morrison_update (matrix)");
  detail::require_dim(x.size(), a_inv.rows(), "sherman_morrison_update");
  detail::require_finite(a_inv, "sherman_morrison_update (matrix)");
  detail::require_finite(x, "sherman_morrison_update (vector)");

  const Vec ax = a_inv * x;
  // q >= 0 for SPD a_inv; rounding can push an exact zero slightly negative.
  const double q = std::max(0.0, x.dot(ax));
  RankOneResult out{a_inv, q};
  if (q > 0.0) {
    out.inverse.noalias() -= (ax * ax.transpose()) / (1.0 + q);
    detail::symmetrize(out.inverse);
  }
  return out;
}

struct RidgeSolution {
  Vec theta;
  double min_value = 0.0;
};

/// Batch ridge regression: minimizes sum (y_t - theta'x_t)^2 + a |theta|^2.
///
/// Rows of `xs` are inputs. Solved by LDLT on (aI + X'X); no explicit inverse.
inline RidgeSolution batch_ridge(const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                 const Eigen::Ref<const Vec>& ys, double a) {
  if (!(a > 0.0)) throw ParamError("batch_ridge: a must be > 0");
  detail::require_dim(ys.size(), xs.rows(), "batch_ridge (outcomes)");
  detail::require_finite(xs, "batch_ridge (inputs)");
  detail::require_finite(ys, "batch_ridge (outcomes)");

  const Eigen::Index n = xs.cols();
  const SymMatrix gram = a * SymMatrix::Identity(n, n) + xs.transpose() * xs;
  const Vec rhs = xs.transpose() * ys;

  Eigen::LDLT<SymMatrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw NumericError("batch_ridge: factorization failed");

  RidgeSolution sol;
  sol.theta = ldlt.solve(rhs);
  const Vec resid = ys - xs * sol.theta;
  sol.min_value = resid.squaredNorm() + a * sol.theta.squaredNorm();
  return sol;
}

/// ln det of a symmetric positive definite matrix via Cholesky.
inline double log_det_spd(const SymMatrix& m) {
  detail::require_finite(m, "log_det_spd");
  Eigen::LLT<SymMatrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError("log_det_spd: matrix not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// ln of the integral over R^n of exp(-(theta'A theta + b'theta + c)).
///
/// Closed form: -W0 + (n/2) ln pi - (1/2) ln det A with W0 = c - b'A^{-1}b / 4.
inline double gaussian_quadratic_integral(const SymMatrix& A, const Vec& b, double c) {
  detail::require_dim(A.cols(), A.rows(), "gaussian_quadratic_integral (matrix)");
  detail::require_dim(b.size(), A.rows(), "gaussian_quadratic_integral");
  detail::require_finite(A, "gaussian_quadratic_integral (matrix)");
  detail::require_finite(b, "gaussian_quadratic_integral (vector)");

  Eigen::LLT<SymMatrix> llt(A);
  if (llt.info() != Eigen::Success) {
    throw NumericError("gaussian_quadratic_integral: A not positive definite");
  }
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double w0 = c - b.dot(llt.solve(b)) / 4.0;
  const auto n = static_cast<double>(A.rows());
  return -w0 + 0.5 * n * std::log(std::numbers::pi) - 0.5 * log_det;
}

/// Sum of ln(1 + q_t). With q_t the per-step quadratic forms x_t'A_{t-1}^{-1}x_t
/// this is ln det(I + (1/a) sum x x').
inline double log_det_from_products(std::span<const double> qs) {
  double acc = 0.0;
  for (double q : qs) {
    if (!(q >= 0.0)) throw NumericError("log_det_from_products: negative or NaN term");
    acc += std::log1p(q);
  }
  return acc;
}

}  // namespace orr
