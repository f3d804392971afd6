// SPDX-License-Identifier: Apache-2.0
//
// Dense kernels.  Two kinds live here:
//  * solver kernels (house_qr, tri_solve, matvec) whose every arithmetic step
//    is rounded to a simulated format;
//  * measurement tools (kappa_inf, singular_values, skeel_cond, norms) that
//    run in long double and never feed back into a solver.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "wlsir/error.hpp"
#include "wlsir/fpsim.hpp"

namespace wlsir {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Scalar type of the measurement tools.
using HighReal = long double;
using HighMatrix = Eigen::Matrix<HighReal, Eigen::Dynamic, Eigen::Dynamic>;
using HighVector = Eigen::Matrix<HighReal, Eigen::Dynamic, 1>;

inline HighMatrix to_high(const Matrix& m) { return m.cast<HighReal>(); }
inline HighVector to_high(const Vector& v) { return v.cast<HighReal>(); }

/// Entrywise round_to.
inline Matrix round_matrix(const Matrix& a, const FpFormat& fmt,
                           FpFlags* flags = nullptr) {
  if (fmt.is_native()) return a;
  Matrix r(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      r(i, j) = round_to(a(i, j), fmt, flags);
  return r;
}

inline Vector round_vector(const Vector& v, const FpFormat& fmt,
                           FpFlags* flags = nullptr) {
  if (fmt.is_native()) return v;
  Vector r(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) r(i) = round_to(v(i), fmt, flags);
  return r;
}

// ---------------------------------------------------------------------------
// Householder QR in simulated precision

/// Thin QR factors A + E = Q * R with Q explicitly formed (m x n) and R upper
/// triangular with nonnegative diagonal.
struct QrFactors {
  Matrix Q;
  Matrix R;
  FpFormat fmt = fp64;
  FpFlags flags;
};

/// Householder QR with LAPACK-style reflectors H = I - tau v v^T, v(0) = 1.
/// A is rounded to fmt first; every subsequent operation is rounded to fmt.
/// Q is accumulated backwards from the stored reflectors.
inline QrFactors house_qr(const Matrix& a_in, const FpFormat& fmt) {
  const Eigen::Index m = a_in.rows(), n = a_in.cols();
  if (m < n || n < 1)
    throw Error(ErrorCode::invalid_shape, "house_qr: need m >= n >= 1");

  Arith ar(fmt);
  Matrix a = round_matrix(a_in, fmt, &ar.flags());
  std::vector<double> tau(static_cast<std::size_t>(n));

  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index len = m - k;
    double* x = a.col(k).data() + k;

    // Scaled 2-norm, as in dnrm2, so that squares of small entries do not
    // vanish into the subnormal range of narrow formats.
    double scale = 0.0;
    for (Eigen::Index i = 0; i < len; ++i) scale = std::max(scale, std::fabs(x[i]));
    if (scale == 0.0 || !std::isfinite(scale))
      throw Error(ErrorCode::rank_deficient,
                  "house_qr: column " + std::to_string(k) + " is zero or not finite");
    double ss = 0.0;
    for (Eigen::Index i = 0; i < len; ++i) {
      const double t = ar.div(x[i], scale);
      ss = ar.add(ss, ar.mul(t, t));
    }
    const double nrm = ar.mul(scale, ar.sqrt(ss));
    const double x0 = x[0];
    const double beta = x0 >= 0.0 ? -nrm : nrm;
    if (beta == 0.0 || !std::isfinite(beta))
      throw Error(ErrorCode::rank_deficient,
                  "house_qr: R(" + std::to_string(k) + "," + std::to_string(k) +
                      ") rounds to zero");
    const double denom = ar.sub(x0, beta);
    tau[static_cast<std::size_t>(k)] = ar.div(ar.sub(beta, x0), beta);
    for (Eigen::Index i = 1; i < len; ++i) x[i] = ar.div(x[i], denom);
    x[0] = beta;

    const double tk = tau[static_cast<std::size_t>(k)];
    for (Eigen::Index j = k + 1; j < n; ++j) {
      double* c = a.col(j).data() + k;
      const double w = ar.add(c[0], ar.dot(x + 1, 1, c + 1, 1, len - 1));
      const double f = ar.mul(tk, w);
      c[0] = ar.sub(c[0], f);
      for (Eigen::Index i = 1; i < len; ++i) c[i] = ar.sub(c[i], ar.mul(f, x[i]));
    }
  }

  QrFactors out;
  out.fmt = fmt;
  out.R = a.topRows(n).triangularView<Eigen::Upper>();

  Matrix q = Matrix::Zero(m, n);
  for (Eigen::Index k = 0; k < n; ++k) q(k, k) = 1.0;
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    const Eigen::Index len = m - k;
    const double* v = a.col(k).data() + k;  // v(0) = 1 implicitly
    const double tk = tau[static_cast<std::size_t>(k)];
    for (Eigen::Index j = k; j < n; ++j) {
      double* c = q.col(j).data() + k;
      const double w = ar.add(c[0], ar.dot(v + 1, 1, c + 1, 1, len - 1));
      const double f = ar.mul(tk, w);
      c[0] = ar.sub(c[0], f);
      for (Eigen::Index i = 1; i < len; ++i) c[i] = ar.sub(c[i], ar.mul(f, v[i]));
    }
  }

  // Nonnegative diagonal; negation is exact.
  for (Eigen::Index k = 0; k < n; ++k) {
    if (out.R(k, k) < 0.0) {
      out.R.row(k) = -out.R.row(k);
      q.col(k) = -q.col(k);
    }
  }
  out.Q = std::move(q);
  out.flags = ar.flags();
  return out;
}

// ---------------------------------------------------------------------------
// Rounded support kernels

enum class Transpose { no, yes };

/// Solve R z = rhs (or R^T z = rhs) for upper triangular R, rounding every
/// operation to fmt.
inline Vector tri_solve(const Matrix& r, const Vector& rhs, const FpFormat& fmt,
                        Transpose trans = Transpose::no,
                        FpFlags* flags = nullptr) {
  const Eigen::Index n = r.rows();
  if (r.cols() != n || rhs.size() != n)
    throw Error(ErrorCode::invalid_shape, "tri_solve: dimension mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (r(i, i) == 0.0)
      throw Error(ErrorCode::zero_diagonal,
                  "tri_solve: zero diagonal at " + std::to_string(i));
  Arith ar(fmt);
  Vector z(n);
  if (trans == Transpose::no) {
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      // Row i of R is strided by the leading dimension.
      const double s = ar.dot(&r(i, i + 1 < n ? i + 1 : i), n, z.data() + i + 1, 1,
                              n - i - 1);
      z(i) = ar.div(ar.sub(ar.round(rhs(i)), s), r(i, i));
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = ar.dot(r.col(i).data(), 1, z.data(), 1, i);
      z(i) = ar.div(ar.sub(ar.round(rhs(i)), s), r(i, i));
    }
  }
  if (flags) *flags |= ar.flags();
  return z;
}

/// y = M v with one rounding per multiply and add (recursive summation).
inline Vector matvec(const Matrix& a, const Vector& v, const FpFormat& fmt,
                     FpFlags* flags = nullptr) {
  if (a.cols() != v.size())
    throw Error(ErrorCode::invalid_shape, "matvec: dimension mismatch");
  Arith ar(fmt);
  Vector y(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    y(i) = ar.dot(&a(i, 0), a.rows(), v.data(), 1, a.cols());
  if (flags) *flags |= ar.flags();
  return y;
}

/// Norms, evaluated in long double.
struct Norms {
  HighReal inf;
  HighReal fro;
  HighReal two;
};

template <class Derived>
HighReal norm_inf(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  return m.template cast<HighReal>().cwiseAbs().rowwise().sum().maxCoeff();
}

template <class Derived>
HighReal norm_fro(const Eigen::MatrixBase<Derived>& m) {
  return m.template cast<HighReal>().norm();
}

/// Singular values in nonincreasing order.
template <class Derived>
std::vector<HighReal> singular_values(const Eigen::MatrixBase<Derived>& m) {
  const HighMatrix a = m.template cast<HighReal>();
  if (a.size() == 0) return {};
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (!std::isfinite(a(i, j)))
        throw Error(ErrorCode::no_convergence, "singular_values: non-finite entry");
  HighVector s;
  if (a.rows() >= a.cols()) {
    Eigen::JacobiSVD<HighMatrix, Eigen::ColPivHouseholderQRPreconditioner> svd(a);
    s = svd.singularValues();
  } else {
    Eigen::JacobiSVD<HighMatrix, Eigen::ColPivHouseholderQRPreconditioner> svd(
        a.transpose());
    s = svd.singularValues();
  }
  std::vector<HighReal> out(s.data(), s.data() + s.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

template <class Derived>
HighReal norm_two(const Eigen::MatrixBase<Derived>& m) {
  const auto s = singular_values(m);
  return s.empty() ? HighReal(0) : s.front();
}

template <class Derived>
Norms norms(const Eigen::MatrixBase<Derived>& m) {
  return {norm_inf(m), norm_fro(m), norm_two(m)};
}

/// Inverse by LU with partial pivoting in long double.  Throws Singular when
/// a pivot is zero or the inverse is not finite.
inline HighMatrix high_inverse(const HighMatrix& m) {
  if (m.rows() != m.cols())
    throw Error(ErrorCode::invalid_shape, "inverse: matrix not square");
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j)))
        throw Error(ErrorCode::singular, "inverse: non-finite entry");
  Eigen::PartialPivLU<HighMatrix> lu(m);
  const HighMatrix& f = lu.matrixLU();
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    if (f(i, i) == 0)
      throw Error(ErrorCode::singular, "inverse: zero pivot");
  HighMatrix inv = lu.inverse();
  for (Eigen::Index j = 0; j < inv.cols(); ++j)
    for (Eigen::Index i = 0; i < inv.rows(); ++i)
      if (!std::isfinite(inv(i, j)))
        throw Error(ErrorCode::singular, "inverse: overflow");
  return inv;
}

/// Solve M X = B in long double (LU with partial pivoting).
inline HighMatrix high_solve(const HighMatrix& m, const HighMatrix& b) {
  Eigen::PartialPivLU<HighMatrix> lu(m);
  const HighMatrix& f = lu.matrixLU();
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    if (f(i, i) == 0) throw Error(ErrorCode::singular, "solve: zero pivot");
  return lu.solve(b);
}

/// kappa_inf(M) = ||M||_inf ||M^{-1}||_inf.
inline HighReal kappa_inf(const HighMatrix& m) {
  return norm_inf(m) * norm_inf(high_inverse(m));
}

inline HighReal kappa_inf(const Matrix& m) { return kappa_inf(to_high(m)); }

/// Two-norm condition number sigma_max / sigma_min of a full-rank matrix.
template <class Derived>
HighReal kappa_two(const Eigen::MatrixBase<Derived>& m) {
  const auto s = singular_values(m);
  return s.front() / s.back();
}

/// Skeel condition number || |M^{-1}| |M| |x| ||_inf / ||x||_inf.
inline HighReal skeel_cond(const HighMatrix& m, const HighVector& x) {
  const HighReal xn = x.cwiseAbs().maxCoeff();
  if (xn == 0) throw Error(ErrorCode::invalid_argument, "skeel_cond: zero vector");
  const HighMatrix inv = high_inverse(m);
  const HighVector t = m.cwiseAbs() * x.cwiseAbs();
  return (inv.cwiseAbs() * t).maxCoeff() / xn;
}

inline HighReal skeel_cond(const Matrix& m, const Vector& x) {
  return skeel_cond(to_high(m), to_high(x));
}

/// Orthonormal basis of range(A) from a long double Householder QR.
inline HighMatrix orthonormal_basis(const HighMatrix& a) {
  Eigen::HouseholderQR<HighMatrix> qr(a);
  return qr.householderQ() * HighMatrix::Identity(a.rows(), a.cols());
}

/// Moore-Penrose pseudoinverse of a full-column-rank matrix via its SVD.
inline HighMatrix pseudo_inverse(const HighMatrix& a) {
  Eigen::JacobiSVD<HighMatrix, Eigen::ColPivHouseholderQRPreconditioner> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const HighVector s = svd.singularValues();
  HighVector sinv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) == 0)
      throw Error(ErrorCode::rank_deficient, "pseudo_inverse: rank deficient");
    sinv(i) = 1 / s(i);
  }
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace wlsir
