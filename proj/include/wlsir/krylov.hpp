// SPDX-License-Identifier: Apache-2.0
//
// Full-memory flexible GMRES (and plain right-preconditioned GMRES) with
// Arnoldi by modified Gram-Schmidt and Givens rotations.  Inner products,
// axpys and the rotations are rounded to KrylovConfig::apply_fmt; the
// operator and preconditioner callables do their own rounding.

#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

#include "wlsir/densela.hpp"
#include "wlsir/error.hpp"
#include "wlsir/fpsim.hpp"

namespace wlsir {

using LinearOp = std::function<Vector(const Vector&)>;

enum class PrecondMode { none, left, split };

struct KrylovConfig {
  int max_iters = 100;
  double rel_tol = 1e-12;
  PrecondMode precond_mode = PrecondMode::none;
  FpFormat apply_fmt = fp64;
  bool keep_basis = false;  ///< retain V, Z and H for arnoldi_check

  void validate() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
      throw Error(ErrorCode::invalid_argument, "KrylovConfig: need 0 < rel_tol < 1");
    if (max_iters < 1)
      throw Error(ErrorCode::invalid_argument, "KrylovConfig: need max_iters >= 1");
  }
};

/// For split mode `left` applies L^{-1} and `right` applies L^{-T}; for left
/// mode only `left` is used.
struct Preconditioning {
  LinearOp left;
  LinearOp right;
};

struct KrylovTrace {
  std::vector<double> residuals;  ///< |g_{k+1}| / beta after each iteration
  int iterations = 0;
  bool converged = false;
  bool happy_breakdown = false;
  bool breakdown = false;  ///< non-finite values; best iterate returned

  void write_csv(std::ostream& os) const {
    os << "iteration,residual\n";
    char buf[64];
    for (std::size_t k = 0; k < residuals.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k + 1, residuals[k]);
      os << buf;
    }
  }
};

struct KrylovResult {
  Vector x;
  KrylovTrace trace;
  // Retained when keep_basis: V is n x (k+1), Z is n x k, H is (k+1) x k.
  Matrix V;
  Matrix Z;
  Matrix H;
};

namespace detail {

struct Givens {
  double c = 1.0;
  double s = 0.0;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline double vnorm(Arith& ar, const Vector& v) {
  return ar.sqrt(ar.dot(v.data(), 1, v.data(), 1, v.size()));
}

struct ArnoldiState {
  std::vector<Vector> v;
  std::vector<Vector> z;
  Matrix h;      // unrotated Hessenberg
  Matrix hr;     // rotated, upper triangular part used for the solve
  std::vector<Givens> rot;
  Vector g;
};

// y = R^{-1} g over the leading k x k triangle of hr.
inline Vector small_solve(Arith& ar, const Matrix& hr, const Vector& g, int k) {
  Vector y(k);
  for (int i = k - 1; i >= 0; --i) {
    double s = g(i);
    for (int j = i + 1; j < k; ++j) s = ar.sub(s, ar.mul(hr(i, j), y(j)));
    y(i) = ar.div(s, hr(i, i));
  }
  return y;
}

inline Vector combine(Arith& ar, const std::vector<Vector>& basis,
                      const Vector& y, Eigen::Index n) {
  Vector x = Vector::Zero(n);
  for (Eigen::Index k = 0; k < y.size(); ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      x(i) = ar.add(x(i), ar.mul(y(k), basis[static_cast<std::size_t>(k)](i)));
  return x;
}

// Core Arnoldi/Givens loop.  `flexible` stores z_k = right(v_k); otherwise
// the right preconditioner is applied once to V y at the end.
inline KrylovResult run_gmres(const LinearOp& apply_a, const LinearOp& left,
                              const LinearOp& right, const Vector& rhs,
                              const KrylovConfig& cfg, bool flexible) {
  cfg.validate();
  const Eigen::Index n = rhs.size();
  Arith ar(cfg.apply_fmt);
  KrylovResult res;
  const int kmax = static_cast<int>(std::min<Eigen::Index>(cfg.max_iters, n));

  Vector r0 = left ? left(rhs) : round_vector(rhs, cfg.apply_fmt);
  const double beta = vnorm(ar, r0);
  if (beta == 0.0) {
    res.x = Vector::Zero(n);
    res.trace.converged = true;
    return res;
  }
  if (!std::isfinite(beta)) {
    res.x = Vector::Zero(n);
    res.trace.breakdown = true;
    return res;
  }

  ArnoldiState st;
  st.h = Matrix::Zero(kmax + 1, kmax);
  st.hr = Matrix::Zero(kmax + 1, kmax);
  st.g = Vector::Zero(kmax + 1);
  st.g(0) = beta;
  Vector v0(n);
  for (Eigen::Index i = 0; i < n; ++i) v0(i) = ar.div(r0(i), beta);
  st.v.push_back(std::move(v0));

  int usable = 0;  // Arnoldi columns that enter the small solve
  for (int k = 0; k < kmax; ++k) {
    const Vector& vk = st.v.back();
    Vector zk = (flexible && right) ? right(vk) : vk;
    Vector w = apply_a(flexible ? zk : (right ? right(vk) : vk));
    if (left) w = left(w);
    if (!all_finite(w)) {
      res.trace.breakdown = true;
      break;
    }
    if (flexible) st.z.push_back(std::move(zk));
    const double wnorm0 = vnorm(ar, w);

    for (int i = 0; i <= k; ++i) {
      const Vector& vi = st.v[static_cast<std::size_t>(i)];
      const double hik = ar.dot(w.data(), 1, vi.data(), 1, n);
      st.h(i, k) = hik;
      for (Eigen::Index t = 0; t < n; ++t) w(t) = ar.sub(w(t), ar.mul(hik, vi(t)));
    }
    const double hnext = vnorm(ar, w);
    st.h(k + 1, k) = hnext;

    // Rotate the new column.
    for (int i = 0; i <= k; ++i) st.hr(i, k) = st.h(i, k);
    st.hr(k + 1, k) = hnext;
    for (int i = 0; i < k; ++i) {
      const Givens& gr = st.rot[static_cast<std::size_t>(i)];
      const double a = st.hr(i, k), b = st.hr(i + 1, k);
      st.hr(i, k) = ar.add(ar.mul(gr.c, a), ar.mul(gr.s, b));
      st.hr(i + 1, k) = ar.sub(ar.mul(gr.c, b), ar.mul(gr.s, a));
    }
    const double a = st.hr(k, k), b = st.hr(k + 1, k);
    Givens gk;
    if (b == 0.0) {
      gk = {1.0, 0.0};
    } else {
      const double scale = std::max(std::fabs(a), std::fabs(b));
      const double as = ar.div(a, scale), bs = ar.div(b, scale);
      const double rr = ar.mul(scale, ar.sqrt(ar.add(ar.mul(as, as), ar.mul(bs, bs))));
      gk = {ar.div(a, rr), ar.div(b, rr)};
      st.hr(k, k) = rr;
    }
    st.hr(k + 1, k) = 0.0;
    st.rot.push_back(gk);
    const double gkv = st.g(k);
    st.g(k) = ar.mul(gk.c, gkv);
    st.g(k + 1) = -ar.mul(gk.s, gkv);
    const double rel = std::fabs(st.g(k + 1)) / beta;
    res.trace.residuals.push_back(rel);
    if (st.hr(k, k) == 0.0) {
      res.trace.breakdown = true;
      break;
    }
    usable = k + 1;

    if (hnext <= cfg.apply_fmt.unit_roundoff() * wnorm0) {
      res.trace.happy_breakdown = true;
      res.trace.converged = true;
      break;
    }
    Vector vn(n);
    for (Eigen::Index i = 0; i < n; ++i) vn(i) = ar.div(w(i), hnext);
    st.v.push_back(std::move(vn));
    if (rel <= cfg.rel_tol) {
      res.trace.converged = true;
      break;
    }
  }

  res.trace.iterations = usable;
  const Vector y = small_solve(ar, st.hr, st.g, usable);
  if (flexible) {
    res.x = combine(ar, st.z, y, n);
  } else {
    Vector u = combine(ar, st.v, y, n);
    res.x = right ? right(u) : u;
  }

  if (cfg.keep_basis) {
    const int kk = usable;
    res.V.resize(n, kk + 1);
    for (int i = 0; i <= kk && i < static_cast<int>(st.v.size()); ++i)
      res.V.col(i) = st.v[static_cast<std::size_t>(i)];
    if (static_cast<int>(st.v.size()) <= kk) res.V.col(kk).setZero();
    res.Z.resize(n, kk);
    for (int i = 0; i < kk; ++i)
      res.Z.col(i) = flexible ? st.z[static_cast<std::size_t>(i)]
                              : st.v[static_cast<std::size_t>(i)];
    res.H = st.h.topLeftCorner(kk + 1, kk);
  }
  return res;
}

}  // namespace detail

/// Flexible GMRES on A x = rhs with x0 = 0.
///  none:  A z = b
///  left:  M^{-1} A z = M^{-1} b  (pc.left = M^{-1})
///  split: L^{-1} A L^{-T} u = L^{-1} b, x = L^{-T} u, with z_k = L^{-T} v_k
///         stored so the returned x is already back-transformed.
inline KrylovResult fgmres(const LinearOp& apply_a, const Preconditioning& pc,
                           const Vector& rhs, const KrylovConfig& cfg) {
  switch (cfg.precond_mode) {
    case PrecondMode::none:
      return detail::run_gmres(apply_a, {}, {}, rhs, cfg, true);
    case PrecondMode::left:
      if (!pc.left)
        throw Error(ErrorCode::invalid_argument, "fgmres: left mode needs pc.left");
      return detail::run_gmres(apply_a, pc.left, {}, rhs, cfg, true);
    case PrecondMode::split:
      if (!pc.left || !pc.right)
        throw Error(ErrorCode::invalid_argument,
                    "fgmres: split mode needs both factor applications");
      return detail::run_gmres(apply_a, pc.left, pc.right, rhs, cfg, true);
  }
  return {};
}

/// Standard (non-flexible) right-preconditioned GMRES: x = M V y.
inline KrylovResult gmres(const LinearOp& apply_a, const LinearOp& right,
                          const Vector& rhs, const KrylovConfig& cfg) {
  return detail::run_gmres(apply_a, {}, right, rhs, cfg, false);
}

/// || A Z_k - V_{k+1} H_k ||_F / || H_k ||_F for a run with keep_basis,
/// evaluated in long double; `effective_op` is the operator the Arnoldi
/// process saw (left preconditioner included).
inline double arnoldi_check(const LinearOp& effective_op, const KrylovResult& r) {
  if (r.H.size() == 0) return 0.0;
  HighMatrix az(r.Z.rows(), r.Z.cols());
  for (Eigen::Index k = 0; k < r.Z.cols(); ++k)
    az.col(k) = to_high(Vector(effective_op(r.Z.col(k))));
  const HighMatrix diff = az - to_high(r.V) * to_high(r.H);
  return static_cast<double>(diff.norm() / to_high(r.H).norm());
}

/// Exact dense operator as a LinearOp (binary64 product).
inline LinearOp dense_op(const Matrix& a) {
  return [a](const Vector& v) -> Vector { return a * v; };
}

/// Dense operator with products rounded to fmt.
inline LinearOp rounded_dense_op(const Matrix& a, const FpFormat& fmt) {
  return [a, fmt](const Vector& v) -> Vector {
    return matvec(a, round_vector(v, fmt), fmt);
  };
}

}  // namespace wlsir
