// SPDX-License-Identifier: Apache-2.0
//
// Simulated reduced-precision floating point.
//
// Values always live in binary64.  A format only describes the rounding that
// is applied after every operation: numbers are rounded to a given number of
// significand bits and exponent range with round-to-nearest-even.  This is
// the same strategy used by MATLAB's chop() and is deterministic on every
// IEEE platform.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include "wlsir/error.hpp"

namespace wlsir {

enum class FormatName { half, single, double_precision, quad_residual };

/// Description of a binary floating-point format.
struct FpFormat {
  FormatName name;
  int significand_bits;  ///< precision t, including the implicit bit
  int exponent_min;      ///< exponent of the smallest normal number
  int exponent_max;      ///< exponent of the largest finite number
  bool subnormals = true;

  /// u = 2^-t, half the spacing of the numbers in [1, 2).
  constexpr double unit_roundoff() const {
    double u = 1.0;
    for (int i = 0; i < significand_bits; ++i) u *= 0.5;
    return u;
  }

  /// binary64 itself, or wider; rounding to these formats is the identity on
  /// stored values.
  constexpr bool is_native() const { return significand_bits >= 53; }

  /// Largest finite value (2 - 2^(1-t)) * 2^emax; only meaningful when the
  /// format is narrower than binary64.
  double max_finite() const;

  constexpr FpFormat without_subnormals() const {
    FpFormat f = *this;
    f.subnormals = false;
    return f;
  }

  friend constexpr bool operator==(const FpFormat& a, const FpFormat& b) {
    return a.name == b.name && a.significand_bits == b.significand_bits &&
           a.exponent_min == b.exponent_min &&
           a.exponent_max == b.exponent_max && a.subnormals == b.subnormals;
  }
};

inline constexpr FpFormat fp16{FormatName::half, 11, -14, 15};
inline constexpr FpFormat fp32{FormatName::single, 24, -126, 127};
inline constexpr FpFormat fp64{FormatName::double_precision, 53, -1022, 1023};
// Only residual accumulation uses the extra precision (double-double); the
// stored result is binary64.
inline constexpr FpFormat fp128r{FormatName::quad_residual, 113, -16382,
                                 16383};

inline constexpr double unit_roundoff(const FpFormat& f) {
  return f.unit_roundoff();
}

inline std::string_view format_name(const FpFormat& f) {
  switch (f.name) {
    case FormatName::half: return "half";
    case FormatName::single: return "single";
    case FormatName::double_precision: return "double";
    case FormatName::quad_residual: return "quadres";
  }
  return "?";
}

/// Accepts half|single|double|quadres (and the fp16/fp32/fp64/fp128 aliases).
inline FpFormat parse_format(std::string_view s) {
  if (s == "half" || s == "fp16") return fp16;
  if (s == "single" || s == "fp32") return fp32;
  if (s == "double" || s == "fp64") return fp64;
  if (s == "quadres" || s == "quad" || s == "fp128") return fp128r;
  throw Error(ErrorCode::invalid_argument,
              "unknown precision '" + std::string(s) + "'");
}

/// Exceptional events raised while rounding.  Returned to callers, never
/// stored globally.
struct FpFlags {
  bool overflow = false;
  bool divide_by_zero = false;
  bool underflow = false;  ///< a nonzero value was flushed to zero

  bool any() const { return overflow || divide_by_zero || underflow; }
  FpFlags& operator|=(const FpFlags& o) {
    overflow |= o.overflow;
    divide_by_zero |= o.divide_by_zero;
    underflow |= o.underflow;
    return *this;
  }
};

namespace detail {

// 2^k for k in the normal binary64 exponent range.
inline double pow2(int k) {
  return std::bit_cast<double>(static_cast<std::uint64_t>(k + 1023) << 52);
}

inline int binary64_exponent(double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  return static_cast<int>((bits >> 52) & 0x7ff) - 1023;
}

}  // namespace detail

inline double FpFormat::max_finite() const {
  return (2.0 - detail::pow2(1 - significand_bits)) * detail::pow2(exponent_max);
}

/// Round x to the nearest value of fmt (ties to even).  Overflow gives
/// +-infinity and sets flags->overflow.
inline double round_to(double x, const FpFormat& fmt, FpFlags* flags = nullptr) {
  if (fmt.is_native() || x == 0.0 || !std::isfinite(x)) return x;
  // Binary64 subnormals report exponent -1023, far below any simulated emin.
  int e = detail::binary64_exponent(x);
  if (e < fmt.exponent_min) {
    if (!fmt.subnormals) {
      if (flags) flags->underflow = true;
      return std::copysign(0.0, x);
    }
    e = fmt.exponent_min;
  }
  const int q = e - (fmt.significand_bits - 1);  // exponent of one ulp
  // Scaling by a power of two is exact here, so rint performs the only
  // rounding, using the default round-to-nearest-even mode.
  double r = std::rint(x * detail::pow2(-q)) * detail::pow2(q);
  if (std::fabs(r) > fmt.max_finite()) {
    if (flags) flags->overflow = true;
    return std::copysign(std::numeric_limits<double>::infinity(), x);
  }
  if (r == 0.0) {
    if (flags) flags->underflow = true;
    r = std::copysign(0.0, x);
  }
  return r;
}

enum class Op { add, sub, mul, div, fma };

/// One operation, computed in binary64 and rounded once to fmt.  The
/// arguments are expected to be representable in fmt already.
inline double rounded_op(Op op, std::span<const double> args,
                         const FpFormat& fmt, FpFlags* flags = nullptr) {
  const auto need = [&](std::size_t k) {
    if (args.size() != k)
      throw Error(ErrorCode::invalid_argument, "rounded_op: wrong arity");
  };
  double r = 0.0;
  switch (op) {
    case Op::add: need(2); r = args[0] + args[1]; break;
    case Op::sub: need(2); r = args[0] - args[1]; break;
    case Op::mul: need(2); r = args[0] * args[1]; break;
    case Op::div:
      need(2);
      if (args[1] == 0.0 && flags) flags->divide_by_zero = true;
      r = args[0] / args[1];
      break;
    case Op::fma: need(3); r = std::fma(args[0], args[1], args[2]); break;
  }
  if (flags && std::isinf(r)) {
    bool finite_in = true;
    for (double a : args) finite_in = finite_in && std::isfinite(a);
    if (finite_in && !(op == Op::div && args[1] == 0.0)) flags->overflow = true;
  }
  return round_to(r, fmt, flags);
}

// Error-free transformations used for the quad-residual format.
namespace eft {

struct Pair {
  double hi;
  double lo;
};

inline Pair two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

inline Pair two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

}  // namespace eft

/// Arithmetic in one simulated format.  Every method rounds its result once;
/// flags accumulate over the lifetime of the object.
///
/// With fp128r, products and sums are plain binary64 but dot() accumulates in
/// double-double (Ogita-Rump-Oishi Dot2), rounding to binary64 at the end.
class Arith {
 public:
  explicit Arith(const FpFormat& fmt) : fmt_(fmt), native_(fmt.is_native()) {}

  const FpFormat& format() const { return fmt_; }
  const FpFlags& flags() const { return flags_; }
  FpFlags& flags() { return flags_; }

  double round(double x) {
    return native_ ? x : round_to(x, fmt_, &flags_);
  }

  double add(double a, double b) { return finish(a + b, a, b); }
  double sub(double a, double b) { return finish(a - b, a, b); }
  double mul(double a, double b) { return finish(a * b, a, b); }
  double div(double a, double b) {
    if (b == 0.0) {
      flags_.divide_by_zero = true;
      return round(a / b);
    }
    return finish(a / b, a, b);
  }
  double sqrt(double a) { return round(std::sqrt(a)); }
  double fma(double a, double b, double c) { return round(std::fma(a, b, c)); }

  /// Sum of x[i]*y[i] over n entries with the given strides.
  double dot(const double* x, std::ptrdiff_t incx, const double* y,
             std::ptrdiff_t incy, std::ptrdiff_t n) {
    if (fmt_.name == FormatName::quad_residual) {
      double s = 0.0, c = 0.0;
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto [p, pe] = eft::two_prod(x[i * incx], y[i * incy]);
        const auto [t, te] = eft::two_sum(s, p);
        s = t;
        c += pe + te;
      }
      return finish(s + c, s, c);
    }
    double s = 0.0;
    if (native_) {
      for (std::ptrdiff_t i = 0; i < n; ++i) s += x[i * incx] * y[i * incy];
      if (std::isinf(s)) flags_.overflow = true;
      return s;
    }
    for (std::ptrdiff_t i = 0; i < n; ++i)
      s = add(s, mul(x[i * incx], y[i * incy]));
    return s;
  }

  double dot(std::span<const double> x, std::span<const double> y) {
    return dot(x.data(), 1, y.data(), 1,
               static_cast<std::ptrdiff_t>(x.size()));
  }

 private:
  double finish(double r, double a, double b) {
    if (std::isinf(r) && std::isfinite(a) && std::isfinite(b))
      flags_.overflow = true;
    return round(r);
  }

  FpFormat fmt_;
  bool native_;
  FpFlags flags_;
};

/// Precisions of mixed-precision iterative refinement: factorization (u_f),
/// working (u), residual (u_r) and correction solve (u_s).
struct PrecisionConfig {
  FpFormat u_f = fp32;
  FpFormat u = fp64;
  FpFormat u_r = fp128r;
  FpFormat u_s = fp64;

  /// u_s defaults to the working precision.
  static PrecisionConfig make(const FpFormat& factor, const FpFormat& working,
                              const FpFormat& residual) {
    return {factor, working, residual, working};
  }

  void validate() const {
    if (!(u_f.unit_roundoff() >= u.unit_roundoff() &&
          u.unit_roundoff() >= u_r.unit_roundoff()))
      throw Error(ErrorCode::invalid_argument,
                  "precisions must satisfy u_f >= u >= u_r");
  }
};

}  // namespace wlsir
