// SPDX-License-Identifier: Apache-2.0
//
// Weighted least-squares test problems: randsvd matrices, logspace row
// scalings, row-equilibrating weights and the alpha scaling.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "wlsir/densela.hpp"
#include "wlsir/error.hpp"

namespace wlsir {

/// Seedable generator with a fully specified output stream: std::mt19937_64
/// feeds 53-bit uniforms, and normals come from the Box-Muller transform
/// (both values of each pair are used, cosine branch first).  The standard
/// library distributions are avoided because their output is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1).
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  /// Column-major fill.
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = normal();
    return g;
  }

  Vector normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// sigma_k = cond2^(-(k-1)/(n-1)), k = 1..n (geometric spacing, sigma_1 = 1).
inline Vector geometric_singular_values(Eigen::Index n, double cond2) {
  Vector s(n);
  for (Eigen::Index k = 0; k < n; ++k)
    s(k) = n == 1 ? 1.0
                  : std::pow(cond2, -static_cast<double>(k) /
                                        static_cast<double>(n - 1));
  return s;
}

/// U * diag(sigma) * V^T with Haar-distributed orthonormal U (m x n) and
/// V (n x n), obtained from binary64 QR of Gaussian matrices.  U is drawn
/// first, then V, from one stream seeded with seed.
inline Matrix gen_randsvd(Eigen::Index m, Eigen::Index n, double cond2,
                          std::uint64_t seed) {
  if (n < 1 || m < n)
    throw Error(ErrorCode::invalid_shape, "gen_randsvd: need m >= n >= 1");
  if (!(cond2 >= 1.0))
    throw Error(ErrorCode::invalid_argument, "gen_randsvd: cond2 must be >= 1");
  Rng rng(seed);
  const Matrix gu = rng.normal_matrix(m, n);
  const Matrix gv = rng.normal_matrix(n, n);
  const Matrix u = house_qr(gu, fp64).Q;
  const Matrix v = house_qr(gv, fp64).Q;
  return u * geometric_singular_values(n, cond2).asDiagonal() * v.transpose();
}

enum class ScaleDirection {
  inverse,  ///< A = S^{-1} A'
  forward,  ///< A = S A'
};

/// Diagonal of S = diag(logspace(1, j, m)): m points log-spaced from 10 to
/// 10^j.  A single point is 10^j, as in MATLAB.
inline Vector logspace_scaling(int j, Eigen::Index m) {
  Vector s(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double e = m == 1 ? j
                            : 1.0 + (j - 1.0) * static_cast<double>(i) /
                                        static_cast<double>(m - 1);
    s(i) = std::pow(10.0, e);
  }
  return s;
}

inline Matrix row_scale(const Matrix& a, int j, ScaleDirection dir) {
  if (j < 1) throw Error(ErrorCode::invalid_argument, "row_scale: j must be >= 1");
  const Vector s = logspace_scaling(j, a.rows());
  Matrix out = a;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (dir == ScaleDirection::inverse)
      out.row(i) /= s(i);
    else
      out.row(i) *= s(i);
  }
  return out;
}

/// D(i) = 1 / max_j |A(i,j)|^2, so every row of D^{1/2} A has max entry 1.
/// weighted: rows of D^{1/2} A have max |entry| 1, D(i) = 1/rowmax^2.
/// scaled:   rows of D A have max |entry| 1, D(i) = 1/rowmax.
enum class WeightRule { weighted, scaled };

inline Vector weight_for(const Matrix& a, WeightRule rule = WeightRule::weighted) {
  Vector d(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double r = a.row(i).cwiseAbs().maxCoeff();
    if (r == 0.0)
      throw Error(ErrorCode::zero_row, "weight_for: row " + std::to_string(i) +
                                           " is zero");
    const double w = 1.0 / r;
    d(i) = rule == WeightRule::weighted ? w * w : w;
  }
  return d;
}

/// kappa_inf of a positive diagonal = max/min.
inline double kappa_diag(const Vector& d) {
  return d.maxCoeff() / d.minCoeff();
}

enum class ProblemSource { randsvd, file, custom };

struct ProblemMeta {
  ProblemSource source = ProblemSource::custom;
  std::uint64_t seed = 0;
  int scaling_exponent = 0;  ///< j of the row scaling; 0 when unscaled
};

/// min_x || D^{1/2} (A x - b) ||_2 with the augmented-system scaling alpha.
struct WlsProblem {
  Matrix A;
  Vector b;
  Vector D;
  double alpha = 1.0;
  ProblemMeta meta;

  Eigen::Index m() const { return A.rows(); }
  Eigen::Index n() const { return A.cols(); }
};

/// alpha = 2^{-1/2} sigma_min(A).
inline double default_alpha(const Matrix& a) {
  const auto s = singular_values(a);
  return static_cast<double>(s.back() / std::sqrt(HighReal(2)));
}

struct AlphaPolicy {
  bool automatic = true;
  double value = 1.0;  ///< used when !automatic

  static AlphaPolicy fixed(double v) { return {false, v}; }
};

/// b ~ N(0, I) from seed, D = weight_for(A), alpha from the policy.
inline WlsProblem make_problem(const Matrix& a, std::uint64_t seed,
                               AlphaPolicy policy = {},
                               WeightRule rule = WeightRule::weighted) {
  if (a.rows() < a.cols())
    throw Error(ErrorCode::invalid_shape, "make_problem: need m >= n");
  WlsProblem p;
  p.A = a;
  Rng rng(seed);
  p.b = rng.normal_vector(a.rows());
  p.D = weight_for(a, rule);
  p.alpha = policy.automatic ? default_alpha(a) : policy.value;
  if (!(p.alpha > 0.0))
    throw Error(ErrorCode::rank_deficient, "make_problem: alpha must be positive");
  p.meta.seed = seed;
  return p;
}

}  // namespace wlsir
