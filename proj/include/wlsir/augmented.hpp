// SPDX-License-Identifier: Apache-2.0
//
// The augmented system
//
//     [ alpha D^{-1}  A ] [ y / alpha ]   [ b ]
//     [ A^T           0 ] [ x         ] = [ 0 ],   y = D (b - A x),
//
// its two preconditioners (left QR and block-diagonal split) and the
// condition-number bounds that go with them.

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wlsir/densela.hpp"
#include "wlsir/error.hpp"
#include "wlsir/fpsim.hpp"
#include "wlsir/problems.hpp"

namespace wlsir {

inline void check_weights(const Vector& d) {
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (!(d(i) >= 1e-300 && d(i) <= 1e300))
      throw Error(ErrorCode::nonpositive_weight,
                  "weight D(" + std::to_string(i) + ") = " +
                      std::to_string(d(i)) + " outside [1e-300, 1e300]");
}

struct AugmentedSystem {
  Matrix op;    ///< (m+n) x (m+n), symmetric, entries stored in fmt
  Vector rhs;   ///< (b; 0)
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  double alpha = 1.0;
  FpFormat fmt = fp64;

  Eigen::Index size() const { return m + n; }

  /// (y / alpha ; x) -> y
  Vector y_of(const Vector& aug) const { return alpha * aug.head(m); }
  Vector x_of(const Vector& aug) const { return aug.tail(n); }

  Vector compose(const Vector& y, const Vector& x) const {
    Vector v(m + n);
    v.head(m) = y / alpha;
    v.tail(n) = x;
    return v;
  }
};

/// Assembles the operator with every entry rounded to fmt.  The (1,1) block
/// holds round(alpha / D(i)).
inline AugmentedSystem build_augmented(const WlsProblem& p,
                                       const FpFormat& fmt = fp64) {
  check_weights(p.D);
  if (!(p.alpha > 0.0))
    throw Error(ErrorCode::invalid_argument, "build_augmented: alpha must be > 0");
  const Eigen::Index m = p.m(), n = p.n();
  AugmentedSystem s;
  s.m = m;
  s.n = n;
  s.alpha = p.alpha;
  s.fmt = fmt;
  s.op = Matrix::Zero(m + n, m + n);
  const Matrix a = round_matrix(p.A, fmt);
  for (Eigen::Index i = 0; i < m; ++i) s.op(i, i) = round_to(p.alpha / p.D(i), fmt);
  s.op.topRightCorner(m, n) = a;
  s.op.bottomLeftCorner(n, m) = a.transpose();
  s.rhs = Vector::Zero(m + n);
  s.rhs.head(m) = round_vector(p.b, fmt);
  return s;
}

/// Reference solution of the augmented system by long double LU.
inline Vector oracle_solve(const AugmentedSystem& s) {
  const HighMatrix x = high_solve(to_high(s.op), to_high(s.rhs));
  return x.col(0).cast<double>();
}

// ---------------------------------------------------------------------------
// Left QR preconditioner
//
//   M_l = [ alpha D^{-1}  Q R ]
//         [ R^T Q^T       0   ]
//
// applied through its explicit inverse with G = (Q^T D Q)^{-1}:
//
//   top    = (1/alpha) (D v1 - D Q G Q^T D v1) + D Q G R^{-T} v2
//   bottom = R^{-1} G Q^T D v1 - alpha R^{-1} G R^{-T} v2

class LeftQrPrecond {
 public:
  /// Q^T D Q and its Cholesky factor are formed in `working`; applications
  /// round to `apply`.
  LeftQrPrecond(QrFactors factors, const Vector& d, double alpha,
                const FpFormat& working, const FpFormat& apply)
      : f_(std::move(factors)), d_(d), alpha_(alpha), working_(working),
        apply_(apply) {
    check_weights(d_);
    const Eigen::Index m = f_.Q.rows(), n = f_.Q.cols();
    if (d_.size() != m)
      throw Error(ErrorCode::invalid_shape, "LeftQrPrecond: D has wrong length");
    Arith ar(working_);
    const Vector dw = round_vector(d_, working_);
    Matrix dq(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < m; ++i) dq(i, j) = ar.mul(dw(i), f_.Q(i, j));
    Matrix g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j; i < n; ++i) {
        g(i, j) = ar.dot(f_.Q.col(i).data(), 1, dq.col(j).data(), 1, m);
        g(j, i) = g(i, j);
      }
    chol_ = cholesky(g, ar);
  }

  LeftQrPrecond(const WlsProblem& p, const FpFormat& factor,
                const FpFormat& working, const FpFormat& apply)
      : LeftQrPrecond(house_qr(p.A, factor), p.D, p.alpha, working, apply) {}

  const QrFactors& factors() const { return f_; }
  const Matrix& cholesky_factor() const { return chol_; }
  const FpFormat& apply_format() const { return apply_; }

  /// Same factors, different application precision.
  LeftQrPrecond with_apply_format(const FpFormat& fmt) const {
    LeftQrPrecond c = *this;
    c.apply_ = fmt;
    return c;
  }

  /// M_l^{-1} v, every operation rounded to the application format.
  Vector apply_inverse(const Vector& v_in, FpFlags* flags = nullptr) const {
    const Eigen::Index m = f_.Q.rows(), n = f_.Q.cols();
    if (v_in.size() != m + n)
      throw Error(ErrorCode::invalid_shape, "apply_Ml_inverse: wrong length");
    Arith ar(apply_);
    const Vector v = round_vector(v_in, apply_, &ar.flags());
    const double alpha = ar.round(alpha_);
    Vector dv1(m), dd(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      dd(i) = ar.round(d_(i));
      dv1(i) = ar.mul(dd(i), v(i));
    }
    Vector t(n);
    for (Eigen::Index j = 0; j < n; ++j)
      t(j) = ar.dot(f_.Q.col(j).data(), 1, dv1.data(), 1, m);
    const Vector s = tri_solve_r(v.tail(n), Transpose::yes, ar);
    const Vector g1 = chol_solve(t, ar);
    const Vector g2 = chol_solve(s, ar);
    const Vector q1 = q_times(g1, ar);
    const Vector q2 = q_times(g2, ar);
    Vector out(m + n);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = ar.div(ar.sub(dv1(i), ar.mul(dd(i), q1(i))), alpha);
      out(i) = ar.add(a, ar.mul(dd(i), q2(i)));
    }
    Vector w(n);
    for (Eigen::Index j = 0; j < n; ++j) w(j) = ar.sub(g1(j), ar.mul(alpha, g2(j)));
    out.tail(n) = tri_solve_r(w, Transpose::no, ar);
    if (flags) *flags |= ar.flags();
    return out;
  }

 private:
  static Matrix cholesky(const Matrix& g, Arith& ar) {
    const Eigen::Index n = g.rows();
    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = g(j, j);
      for (Eigen::Index k = 0; k < j; ++k) s = ar.sub(s, ar.mul(l(j, k), l(j, k)));
      if (!(s > 0.0) || !std::isfinite(s))
        throw Error(ErrorCode::cholesky_failed,
                    "Q^T D Q is not numerically positive definite (pivot " +
                        std::to_string(j) + ")");
      l(j, j) = ar.sqrt(s);
      for (Eigen::Index i = j + 1; i < n; ++i) {
        double t = g(i, j);
        for (Eigen::Index k = 0; k < j; ++k) t = ar.sub(t, ar.mul(l(i, k), l(j, k)));
        l(i, j) = ar.div(t, l(j, j));
      }
    }
    return l;
  }

  Vector chol_solve(const Vector& b, Arith& ar) const {
    const Eigen::Index n = chol_.rows();
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = b(i);
      for (Eigen::Index k = 0; k < i; ++k) s = ar.sub(s, ar.mul(chol_(i, k), z(k)));
      z(i) = ar.div(s, chol_(i, i));
    }
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      double s = z(i);
      for (Eigen::Index k = i + 1; k < n; ++k) s = ar.sub(s, ar.mul(chol_(k, i), z(k)));
      z(i) = ar.div(s, chol_(i, i));
    }
    return z;
  }

  Vector tri_solve_r(const Vector& b, Transpose t, Arith& ar) const {
    const Matrix& r = f_.R;
    const Eigen::Index n = r.rows();
    Vector z(n);
    if (t == Transpose::yes) {
      for (Eigen::Index i = 0; i < n; ++i) {
        double s = b(i);
        for (Eigen::Index k = 0; k < i; ++k) s = ar.sub(s, ar.mul(r(k, i), z(k)));
        z(i) = ar.div(s, r(i, i));
      }
    } else {
      for (Eigen::Index i = n - 1; i >= 0; --i) {
        double s = b(i);
        for (Eigen::Index k = i + 1; k < n; ++k) s = ar.sub(s, ar.mul(r(i, k), z(k)));
        z(i) = ar.div(s, r(i, i));
      }
    }
    return z;
  }

  Vector q_times(const Vector& g, Arith& ar) const {
    const Eigen::Index m = f_.Q.rows();
    Vector y(m);
    for (Eigen::Index i = 0; i < m; ++i)
      y(i) = ar.dot(&f_.Q(i, 0), m, g.data(), 1, g.size());
    return y;
  }

  QrFactors f_;
  Vector d_;
  double alpha_;
  FpFormat working_;
  FpFormat apply_;
  Matrix chol_;
};

/// Dense M_l in long double from the computed factors.
inline HighMatrix assemble_left_preconditioner(const QrFactors& f,
                                               const Vector& d, double alpha) {
  const Eigen::Index m = f.Q.rows(), n = f.Q.cols();
  HighMatrix ml = HighMatrix::Zero(m + n, m + n);
  const HighMatrix qr = to_high(f.Q) * to_high(f.R);
  for (Eigen::Index i = 0; i < m; ++i)
    ml(i, i) = static_cast<HighReal>(alpha) / static_cast<HighReal>(d(i));
  ml.topRightCorner(m, n) = qr;
  ml.bottomLeftCorner(n, m) = qr.transpose();
  return ml;
}

// ---------------------------------------------------------------------------
// Block-diagonal split preconditioner
//
//   M_b = blkdiag(alpha D^{-1}, C),   C = R_w^T R_w ~ alpha^{-1} A^T D A,
//   M_b = L L^T,   L = blkdiag(alpha^{1/2} D^{-1/2}, R_w^T),
//
// so that L^{-1} A~ L^{-T} = [[I, A_hat], [A_hat^T, 0]] with
// A_hat = alpha^{-1/2} D^{1/2} A R_w^{-1}.

enum class Side { left, right };

class BlockSplitPrecond {
 public:
  /// D^{1/2} A is formed in `working` and factored in `factor`; the R
  /// factor is then scaled by alpha^{-1/2} in `working`.  Scaling after the
  /// factorization keeps the entries of the matrix being factored at most 1
  /// in magnitude.
  BlockSplitPrecond(const WlsProblem& p, const FpFormat& factor,
                    const FpFormat& working, const FpFormat& apply)
      : alpha_(p.alpha), apply_(apply) {
    check_weights(p.D);
    const Eigen::Index m = p.m(), n = p.n();
    Arith ar(working);
    const double inv_sqrt_alpha = ar.round(1.0 / std::sqrt(p.alpha));
    Vector sqrt_d(m);
    Matrix w(m, n);
    scale_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      sqrt_d(i) = ar.round(std::sqrt(p.D(i)));
      scale_(i) = ar.mul(sqrt_d(i), inv_sqrt_alpha);
      for (Eigen::Index j = 0; j < n; ++j)
        w(i, j) = ar.mul(sqrt_d(i), ar.round(p.A(i, j)));
    }
    const QrFactors f = house_qr(w, factor);
    r_.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        r_(i, j) = i <= j ? ar.mul(f.R(i, j), inv_sqrt_alpha) : 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (r_(i, i) == 0.0 || !std::isfinite(r_(i, i)))
        throw Error(ErrorCode::rank_deficient,
                    "BlockSplitPrecond: singular triangular factor");
  }

  /// R_w, the upper triangular factor with C = R_w^T R_w.
  const Matrix& r_factor() const { return r_; }
  /// sqrt(D(i) / alpha), the inverse of the top diagonal block of L.
  const Vector& top_scale() const { return scale_; }
  double alpha() const { return alpha_; }

  BlockSplitPrecond with_apply_format(const FpFormat& fmt) const {
    BlockSplitPrecond c = *this;
    c.apply_ = fmt;
    return c;
  }

  /// side = left: L^{-1} v; side = right: L^{-T} v.
  Vector apply(const Vector& v_in, Side side, FpFlags* flags = nullptr) const {
    const Eigen::Index m = scale_.size(), n = r_.rows();
    if (v_in.size() != m + n)
      throw Error(ErrorCode::invalid_shape, "apply_split_factor: wrong length");
    Arith ar(apply_);
    const Vector v = round_vector(v_in, apply_, &ar.flags());
    Vector out(m + n);
    for (Eigen::Index i = 0; i < m; ++i) out(i) = ar.mul(ar.round(scale_(i)), v(i));
    out.tail(n) = tri_solve(r_, v.tail(n), apply_,
                            side == Side::left ? Transpose::yes : Transpose::no,
                            &ar.flags());
    if (flags) *flags |= ar.flags();
    return out;
  }

  /// Dense L in long double.
  HighMatrix assemble_factor() const {
    const Eigen::Index m = scale_.size(), n = r_.rows();
    HighMatrix l = HighMatrix::Zero(m + n, m + n);
    for (Eigen::Index i = 0; i < m; ++i) l(i, i) = 1 / static_cast<HighReal>(scale_(i));
    l.bottomRightCorner(n, n) = to_high(r_).transpose();
    return l;
  }

  /// L^{-1} A~ L^{-T} in long double.
  HighMatrix preconditioned_operator(const Matrix& aug) const {
    const HighMatrix l = assemble_factor();
    HighMatrix t = l.triangularView<Eigen::Lower>().solve(to_high(aug));
    HighMatrix s =
        l.triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
    return s;
  }

 private:
  double alpha_;
  FpFormat apply_;
  Vector scale_;
  Matrix r_;
};

/// M_b^{-1} A~ for the exact Schur complement, used in tests.
inline HighMatrix exact_split_operator(const WlsProblem& p) {
  const Eigen::Index m = p.m(), n = p.n();
  const HighMatrix a = to_high(p.A);
  const HighVector d = to_high(p.D);
  const HighReal alpha = p.alpha;
  HighMatrix w = d.cwiseSqrt().asDiagonal() * a;
  w /= std::sqrt(alpha);
  Eigen::HouseholderQR<HighMatrix> qr(w);
  HighMatrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  HighMatrix l = HighMatrix::Zero(m + n, m + n);
  for (Eigen::Index i = 0; i < m; ++i) l(i, i) = std::sqrt(alpha / d(i));
  l.bottomRightCorner(n, n) = r.transpose();
  HighMatrix aug = HighMatrix::Zero(m + n, m + n);
  for (Eigen::Index i = 0; i < m; ++i) aug(i, i) = alpha / d(i);
  aug.topRightCorner(m, n) = a;
  aug.bottomLeftCorner(n, m) = a.transpose();
  HighMatrix t = l.triangularView<Eigen::Lower>().solve(aug);
  return l.triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
}

// ---------------------------------------------------------------------------
// Measurements

/// kappa_inf(M_l^{-1} A~) with M_l assembled from the factors.
inline HighReal kappa_left_preconditioned(const Matrix& aug, const QrFactors& f,
                                          const Vector& d, double alpha) {
  const HighMatrix ml = assemble_left_preconditioner(f, d, alpha);
  return kappa_inf(high_solve(ml, to_high(aug)));
}

// ---------------------------------------------------------------------------
// Bounds

struct ScaledPinv {
  HighReal rho;          ///< || (Q^T D Q)^{-1} Q^T D ||_2
  HighReal sqrt_kappa_d; ///< kappa_2(D)^{1/2}, the analytic bound on rho
};

/// rho for an orthonormal Q.  With Q_D = D^{1/2} Q = Q2 R2, the weighted
/// pseudoinverse is R2^{-1} Q2^T D^{1/2}, which avoids forming Q^T D Q.
inline ScaledPinv scaled_pinv_norm(const HighMatrix& q, const Vector& d) {
  check_weights(d);
  const Eigen::Index m = q.rows(), n = q.cols();
  if (d.size() != m)
    throw Error(ErrorCode::invalid_shape, "scaled_pinv_norm: D has wrong length");
  const HighReal orth =
      (q.transpose() * q - HighMatrix::Identity(n, n)).norm();
  if (!(orth <= 1e-8))
    throw Error(ErrorCode::not_orthonormal,
                "scaled_pinv_norm: Q is not orthonormal");
  const HighVector sd = to_high(d).cwiseSqrt();
  const HighMatrix qd = sd.asDiagonal() * q;
  Eigen::HouseholderQR<HighMatrix> qr(qd);
  const HighMatrix q2 = qr.householderQ() * HighMatrix::Identity(m, n);
  const HighMatrix r2 = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const HighMatrix rhs = q2.transpose() * sd.asDiagonal();
  const HighMatrix x = r2.triangularView<Eigen::Upper>().solve(rhs);
  ScaledPinv out;
  out.rho = norm_two(x);
  out.sqrt_kappa_d = std::sqrt(static_cast<HighReal>(d.maxCoeff()) /
                               static_cast<HighReal>(d.minCoeff()));
  return out;
}

inline ScaledPinv scaled_pinv_norm(const Matrix& q, const Vector& d) {
  return scaled_pinv_norm(to_high(q), d);
}

/// gamma~_{mn} = c m n u / (1 - m n u) with c = 1; infinite once m n u >= 1.
inline double gamma_tilde(Eigen::Index m, Eigen::Index n, const FpFormat& fmt) {
  const double mnu = static_cast<double>(m) * static_cast<double>(n) *
                     fmt.unit_roundoff();
  return mnu < 1.0 ? mnu / (1.0 - mnu) : std::numeric_limits<double>::infinity();
}

struct LeftBound {
  double bound;             ///< (1 + 2 m sqrt(n) rho theta gamma~ kappa_inf(A))^2
  double bound_sqrt_kd;     ///< same with rho replaced by kappa_2(D)^{1/2}
  double bound_measured_e;  ///< (1 + (sqrt(m)+sqrt(n)) rho theta ||A^+||_2 ||E||_F)^2
  double rho;
  double sqrt_kappa_d;
  double theta;             ///< max(1, ||D||_2, ||D^{-1}||_2)
  double gamma;
  double e_norm_fro;        ///< || Q R - A ||_F
  double kappa_inf_a;       ///< ||A||_inf ||A^+||_inf
  double pinv_norm_two;     ///< ||A^+||_2
};

/// Condition bound for the left QR preconditioner built from f = house_qr(A).
/// rho is evaluated on a long double orthonormal basis of range(A): the
/// computed Q of a low-precision factorization is not orthonormal.
inline LeftBound bound_left(const Matrix& a, const Vector& d, const QrFactors& f) {
  check_weights(d);
  const Eigen::Index m = a.rows(), n = a.cols();
  const HighMatrix ah = to_high(a);
  const ScaledPinv sp = scaled_pinv_norm(orthonormal_basis(ah), d);
  const HighMatrix pinv = pseudo_inverse(ah);
  LeftBound b{};
  b.rho = static_cast<double>(sp.rho);
  b.sqrt_kappa_d = static_cast<double>(sp.sqrt_kappa_d);
  b.theta = std::max({1.0, d.maxCoeff(), 1.0 / d.minCoeff()});
  b.gamma = gamma_tilde(m, n, f.fmt);
  b.e_norm_fro = static_cast<double>((to_high(f.Q) * to_high(f.R) - ah).norm());
  b.kappa_inf_a = static_cast<double>(norm_inf(ah) * norm_inf(pinv));
  b.pinv_norm_two = static_cast<double>(norm_two(pinv));
  const double c = 2.0 * static_cast<double>(m) * std::sqrt(static_cast<double>(n));
  const auto sq = [](double x) { return x * x; };
  b.bound = sq(1.0 + c * b.rho * b.theta * b.gamma * b.kappa_inf_a);
  b.bound_sqrt_kd = sq(1.0 + c * b.sqrt_kappa_d * b.theta * b.gamma * b.kappa_inf_a);
  b.bound_measured_e =
      sq(1.0 + (std::sqrt(static_cast<double>(m)) + std::sqrt(static_cast<double>(n))) *
                   b.rho * b.theta * b.pinv_norm_two * b.e_norm_fro);
  return b;
}

struct SplitBound {
  std::vector<double> sigma;     ///< singular values of A_hat, nonincreasing
  std::vector<double> spectrum;  ///< predicted eigenvalues, ascending
  double bound;                  ///< condition bound on L^{-1} A~ L^{-T}
};

/// Predicted spectrum {1} U {(1 +- sqrt(1 + 4 sigma_k^2)) / 2} and the bound
///   |1 + sqrt(1 + 4 s_1^2)| / |1 - sqrt(1 + 4 s_n^2)| * (n + m).
/// Eigenvalue 1 has multiplicity m - n.
inline SplitBound bound_split(const Matrix& a, const Vector& d, double alpha,
                              const Matrix& r_w) {
  check_weights(d);
  const Eigen::Index m = a.rows(), n = a.cols();
  HighMatrix w = to_high(d).cwiseSqrt().asDiagonal() * to_high(a);
  w /= std::sqrt(static_cast<HighReal>(alpha));
  const HighMatrix ahat =
      to_high(r_w).triangularView<Eigen::Upper>()
          .solve<Eigen::OnTheRight>(w);
  const auto s = singular_values(ahat);
  if (s.back() == 0 || !(s.back() > s.front() * 1e3L *
                                        std::numeric_limits<HighReal>::epsilon()))
    throw Error(ErrorCode::rank_deficient, "bound_split: A_hat is rank deficient");
  SplitBound out;
  for (HighReal v : s) {
    out.sigma.push_back(static_cast<double>(v));
    const HighReal root = std::sqrt(1 + 4 * v * v);
    out.spectrum.push_back(static_cast<double>((1 - root) / 2));
    out.spectrum.push_back(static_cast<double>((1 + root) / 2));
  }
  for (Eigen::Index i = 0; i < m - n; ++i) out.spectrum.push_back(1.0);
  std::sort(out.spectrum.begin(), out.spectrum.end());
  const HighReal s1 = s.front(), sn = s.back();
  out.bound = static_cast<double>(std::fabs(1 + std::sqrt(1 + 4 * s1 * s1)) /
                                  std::fabs(1 - std::sqrt(1 + 4 * sn * sn)) *
                                  static_cast<HighReal>(n + m));
  return out;
}

/// Forward-error bound of split-preconditioned FGMRES:
/// kappa_inf(L^{-1} A~ L^{-T}) * kappa_inf(L) * u.
inline double bound_ferr_fgmres(double kappa_precond_system, double kappa_half,
                                double u) {
  return kappa_precond_system * kappa_half * u;
}

/// Left-preconditioned variant: kappa_inf(M_l^{-1} A~) * u.
inline double bound_ferr_fgmres_left(double kappa_precond_system, double u) {
  return kappa_precond_system * u;
}

/// Convergence guarantee region kappa <= 1/u.
inline bool convergence_gate(double kappa_measured, double u) {
  return kappa_measured <= 1.0 / u;
}

// ---------------------------------------------------------------------------
// Report

struct BoundReport {
  double rho = 0, theta = 0, gamma_tilde = 0, E_norm_fro = 0;
  double sqrt_kappa_d = 0;
  double bound_kinf_left = 0;        ///< with computed rho
  double bound_kinf_left_sqrt_kd = 0;
  double bound_kinf_left_measured_e = 0;
  double bound_kinf_split = 0;
  double bound_ferr_left = 0;
  double bound_ferr_fgmres = 0;      ///< split case
  double kappa_aug = 0;              ///< kappa_inf(A~)
  double kappa_left = 0;             ///< kappa_inf(M_l^{-1} A~)
  double kappa_split = 0;            ///< kappa_inf(L^{-1} A~ L^{-T})
  double kappa_split_factor = 0;     ///< kappa_inf(L)

  static std::vector<std::string> csv_columns() {
    return {"rho", "theta", "gamma_tilde", "E_norm_fro", "sqrt_kappa2_D",
            "bound_kinf_left", "bound_kinf_left_sqrt_kd",
            "bound_kinf_left_measured_E", "bound_kinf_split", "bound_ferr_left",
            "bound_ferr_fgmres", "kappa_aug", "kappa_left", "kappa_split",
            "kappa_L"};
  }

  std::vector<double> csv_values() const {
    return {rho, theta, gamma_tilde, E_norm_fro, sqrt_kappa_d, bound_kinf_left,
            bound_kinf_left_sqrt_kd, bound_kinf_left_measured_e,
            bound_kinf_split, bound_ferr_left, bound_ferr_fgmres, kappa_aug,
            kappa_left, kappa_split, kappa_split_factor};
  }
};

/// All bounds and measured condition numbers for one problem, with both
/// preconditioners factored in `factor`; u is the working precision used in
/// the forward-error bounds.
inline BoundReport evaluate_bounds(const WlsProblem& p, const FpFormat& factor,
                                   const FpFormat& u) {
  BoundReport r;
  const AugmentedSystem s = build_augmented(p);
  const QrFactors f = house_qr(p.A, factor);
  const LeftBound lb = bound_left(p.A, p.D, f);
  r.rho = lb.rho;
  r.theta = lb.theta;
  r.gamma_tilde = lb.gamma;
  r.E_norm_fro = lb.e_norm_fro;
  r.sqrt_kappa_d = lb.sqrt_kappa_d;
  r.bound_kinf_left = lb.bound;
  r.bound_kinf_left_sqrt_kd = lb.bound_sqrt_kd;
  r.bound_kinf_left_measured_e = lb.bound_measured_e;
  r.kappa_aug = static_cast<double>(kappa_inf(s.op));
  r.kappa_left = static_cast<double>(kappa_left_preconditioned(s.op, f, p.D, p.alpha));
  const BlockSplitPrecond bs(p, factor, fp64, fp64);
  r.bound_kinf_split = bound_split(p.A, p.D, p.alpha, bs.r_factor()).bound;
  r.kappa_split = static_cast<double>(kappa_inf(bs.preconditioned_operator(s.op)));
  r.kappa_split_factor = static_cast<double>(kappa_inf(bs.assemble_factor()));
  r.bound_ferr_left = bound_ferr_fgmres_left(r.kappa_left, u.unit_roundoff());
  r.bound_ferr_fgmres =
      bound_ferr_fgmres(r.kappa_split, r.kappa_split_factor, u.unit_roundoff());
  return r;
}

}  // namespace wlsir
