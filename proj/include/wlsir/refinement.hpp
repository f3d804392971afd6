// SPDX-License-Identifier: Apache-2.0
//
// Mixed-precision iterative refinement on the augmented system:
//
//   x_0:  A x_0 = b                     (u_f, stored in u)
//   r_i = b - A x_i                     (u_r, stored in u)
//   solve A d_{i+1} = r_i               (u_s, stored in u)
//   x_{i+1} = x_i + d_{i+1}             (u)
//
// with the correction solve done by the left QR preconditioner applied
// directly (LS-IR) or by FGMRES with the left or the split preconditioner.

#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wlsir/augmented.hpp"
#include "wlsir/densela.hpp"
#include "wlsir/error.hpp"
#include "wlsir/fpsim.hpp"
#include "wlsir/krylov.hpp"
#include "wlsir/problems.hpp"

namespace wlsir {

enum class Method { lsir, fgmres_left, fgmres_split };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::lsir: return "lsir";
    case Method::fgmres_left: return "fgmres_left";
    case Method::fgmres_split: return "fgmres_split";
  }
  return "?";
}

struct RefinementOptions {
  int max_steps = 20;        ///< i_max
  double stagnation_ratio = 0.9;
  bool compute_oracle = true;
  /// Apply the preconditioner (and the Krylov kernels) in binary64 instead
  /// of u_s.
  bool compensated_apply = false;
};

struct RefinementStep {
  double rel_correction;    ///< ||d||_inf / ||x~||_inf
  double aug_residual_inf;  ///< ||(b;0) - A~ x~||_inf before the correction
  double normal_residual;   ///< ||A^T D (b - A x)||_inf after the update
  int krylov_iterations;    ///< 0 for lsir
};

struct RefinementResult {
  Vector x;
  Vector y;
  Vector augmented;  ///< (y / alpha; x) as stored in u
  int iterations = 0;
  bool converged = false;
  bool stagnated = false;
  bool initial_overflow = false;  ///< initial solve in u_f overflowed; x~_0 = 0
  std::vector<RefinementStep> history;
  double ferr_estimate = 0.0;
  std::optional<double> ferr_vs_oracle;      ///< on x
  std::optional<double> ferr_aug_vs_oracle;  ///< on (y / alpha; x)

  /// One JSON object per step.
  void write_jsonl(std::ostream& os) const {
    char buf[256];
    for (std::size_t i = 0; i < history.size(); ++i) {
      const auto& h = history[i];
      std::snprintf(buf, sizeof buf,
                    "{\"step\":%zu,\"rel_correction\":%.17g,"
                    "\"aug_residual_inf\":%.17g,\"normal_residual\":%.17g,"
                    "\"krylov_iterations\":%d}\n",
                    i + 1, h.rel_correction, h.aug_residual_inf,
                    h.normal_residual, h.krylov_iterations);
      os << buf;
    }
  }
};

/// u_r * cond(A~, x~) + u.
inline double ferr_estimate(const AugmentedSystem& s, const Vector& aug,
                            const PrecisionConfig& pc) {
  return pc.u_r.unit_roundoff() * static_cast<double>(skeel_cond(s.op, aug)) +
         pc.u.unit_roundoff();
}

namespace detail {

inline double inf_norm(const Vector& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

inline double normal_equations_residual(const WlsProblem& p, const Vector& x) {
  const HighVector r = to_high(p.b) - to_high(p.A) * to_high(x);
  const HighVector g = to_high(p.A).transpose() * (to_high(p.D).asDiagonal() * r);
  return static_cast<double>(g.cwiseAbs().maxCoeff());
}

}  // namespace detail

/// The problem data (A, b, D, alpha) are first rounded to the working
/// precision: they are what the refinement stores, and the oracle solves
/// the same stored system.
inline RefinementResult solve_wlsir(const WlsProblem& p_in,
                                    const PrecisionConfig& pc, Method method,
                                    KrylovConfig kcfg,
                                    const RefinementOptions& opts = {}) {
  pc.validate();
  WlsProblem p = p_in;
  p.A = round_matrix(p_in.A, pc.u);
  p.b = round_vector(p_in.b, pc.u);
  p.D = round_vector(p_in.D, pc.u);
  p.alpha = round_to(p_in.alpha, pc.u);
  const AugmentedSystem sys = build_augmented(p, pc.u);
  const Eigen::Index m = p.m(), n = p.n(), N = m + n;

  QrFactors f;
  try {
    f = house_qr(p.A, pc.u_f);
  } catch (const Error& e) {
    throw Error(ErrorCode::factorization_failed,
                std::string("QR in ") + std::string(format_name(pc.u_f)) +
                    " failed: " + e.what());
  }
  const FpFormat apply_fmt = opts.compensated_apply ? fp64 : pc.u_s;
  std::optional<LeftQrPrecond> left;
  try {
    left.emplace(f, p.D, p.alpha, pc.u, apply_fmt);
  } catch (const Error& e) {
    throw Error(ErrorCode::factorization_failed, e.what());
  }
  std::optional<BlockSplitPrecond> split;
  if (method == Method::fgmres_split) {
    try {
      split.emplace(p, pc.u_f, pc.u, apply_fmt);
    } catch (const Error& e) {
      throw Error(ErrorCode::factorization_failed, e.what());
    }
  }

  RefinementResult res;

  // Initial solve with the u_f factors: M_l^{-1} (b; 0) is exactly the
  // weighted least-squares solution through Q and R in its bottom block.
  FpFlags init_flags;
  Vector xt = round_vector(left->with_apply_format(pc.u_f).apply_inverse(sys.rhs, &init_flags),
                           pc.u);
  if (!xt.allFinite()) {
    res.initial_overflow = true;
    xt = Vector::Zero(N);
  }

  kcfg.apply_fmt = apply_fmt;
  kcfg.precond_mode = method == Method::fgmres_split ? PrecondMode::split
                      : method == Method::fgmres_left ? PrecondMode::left
                                                      : PrecondMode::none;
  const LinearOp apply_a = rounded_dense_op(sys.op, apply_fmt);
  Preconditioning prec;
  if (method == Method::fgmres_left || method == Method::lsir) {
    prec.left = [&left](const Vector& v) { return left->apply_inverse(v); };
  } else {
    prec.left = [&split](const Vector& v) { return split->apply(v, Side::left); };
    prec.right = [&split](const Vector& v) { return split->apply(v, Side::right); };
  }

  Arith work(pc.u);
  double prev_ratio = -1.0;
  int growth_count = 0;
  Vector best = xt;
  double best_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < opts.max_steps; ++i) {
    // Residual in u_r, stored in u.
    Arith rar(pc.u_r);
    Vector r(N);
    for (Eigen::Index k = 0; k < N; ++k) {
      const double ax = rar.dot(&sys.op(k, 0), N, xt.data(), 1, N);
      r(k) = work.round(rar.sub(sys.rhs(k), ax));
    }

    Vector d;
    int kit = 0;
    if (method == Method::lsir) {
      d = prec.left(r);
    } else {
      const KrylovResult kr = fgmres(apply_a, prec, r, kcfg);
      d = kr.x;
      kit = kr.trace.iterations;
    }
    d = round_vector(d, pc.u);
    for (Eigen::Index k = 0; k < N; ++k) xt(k) = work.add(xt(k), d(k));

    const double xn = detail::inf_norm(xt);
    const double ratio = xn > 0.0 ? detail::inf_norm(d) / xn
                                  : std::numeric_limits<double>::infinity();
    res.history.push_back({ratio, detail::inf_norm(r),
                           detail::normal_equations_residual(p, sys.x_of(xt)), kit});
    res.iterations = i + 1;
    if (std::isfinite(ratio) && ratio < best_ratio) {
      best_ratio = ratio;
      best = xt;
    }
    if (!xt.allFinite()) break;
    if (ratio <= std::sqrt(static_cast<double>(N)) * pc.u.unit_roundoff()) {
      res.converged = true;
      break;
    }
    if (prev_ratio > 0.0 && ratio >= opts.stagnation_ratio * prev_ratio) {
      if (++growth_count >= 2) {
        res.stagnated = true;
        break;
      }
    } else {
      growth_count = 0;
    }
    prev_ratio = ratio;
  }
  if (!res.converged) xt = best;

  res.augmented = xt;
  res.x = sys.x_of(xt);
  res.y = sys.y_of(xt);
  if (xt.allFinite() && detail::inf_norm(xt) > 0.0)
    res.ferr_estimate = ferr_estimate(sys, xt, pc);
  else
    res.ferr_estimate = std::numeric_limits<double>::infinity();
  if (opts.compute_oracle) {
    const Vector ref = oracle_solve(sys);
    const Vector xr = sys.x_of(ref);
    res.ferr_vs_oracle = detail::inf_norm(res.x - xr) / detail::inf_norm(xr);
    res.ferr_aug_vs_oracle = detail::inf_norm(xt - ref) / detail::inf_norm(ref);
  }
  return res;
}

}  // namespace wlsir
