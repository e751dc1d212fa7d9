#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include "ffit/errors.hpp"

// Inlinable, branch-poor approximations of exp and log for batch kernels.
// Both use the classic argument-reduction + short-polynomial construction
// so the compiler can auto-vectorize the surrounding loops. Accuracy is a
// couple of ulp over the working range (see tests/test_fastmath.cpp for
// the measured sweep); the contract requires <= 1e-12 relative.

namespace ffit::fastmath {

enum class MathPolicy { Precise, Fast };

// Branchless two-way select: mask must be exactly 0.0 or 1.0. Both inputs
// are always evaluated, so NaN on the unselected side still propagates.
inline double select(double mask, double a, double b) {
  return mask * a + (1.0 - mask) * b;
}

namespace detail {

inline constexpr double kLog2E = 1.4426950408889634074;
// ln(2) split so that k * kLn2Hi is exact for |k| <= 2^20.
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;

// exp(r) on |r| <= ln(2)/2 as 1 + r + r^2 * P(r), Taylor through 1/13!.
inline double exp_poly(double r) {
  double p = 1.0 / 6227020800.0;
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  return 1.0 + r + r * r * p;
}

// 2^k for k in [-2044, 2046] via two exponent-field constructions; the
// split keeps each factor a normal number so subnormal results round
// correctly in the final multiply.
inline double scale_by_pow2(double v, std::int64_t k) {
  const std::int64_t k1 = k >> 1;
  const std::int64_t k2 = k - k1;
  const double s1 = std::bit_cast<double>(static_cast<std::uint64_t>(1023 + k1) << 52);
  const double s2 = std::bit_cast<double>(static_cast<std::uint64_t>(1023 + k2) << 52);
  return v * s1 * s2;
}

}  // namespace detail

inline double fast_exp(double x) {
  const bool is_nan = x != x;
  double xs = is_nan ? 0.0 : x;
  xs = xs > 710.0 ? 710.0 : xs;
  xs = xs < -746.0 ? -746.0 : xs;
  const double kd = std::nearbyint(xs * detail::kLog2E);
  const double r = (xs - kd * detail::kLn2Hi) - kd * detail::kLn2Lo;
  const double res =
      detail::scale_by_pow2(detail::exp_poly(r), static_cast<std::int64_t>(kd));
  return is_nan ? x : res;
}

inline double fast_log(double x) {
  const double inf = std::numeric_limits<double>::infinity();
  // Sanitize non-positive inputs so the core path stays well defined; the
  // true results are patched back in at the end.
  double xs = x > 0.0 ? x : 1.0;
  const bool subnormal = xs < std::numeric_limits<double>::min();
  xs = subnormal ? xs * 0x1p54 : xs;

  const std::uint64_t bits = std::bit_cast<std::uint64_t>(xs);
  std::int64_t e = static_cast<std::int64_t>(bits >> 52) - 1022;
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) |
                                   0x3FE0000000000000ull);  // m in [0.5, 1)
  // Rebalance to m in [sqrt(1/2), sqrt(2)) so x near 1 has e == 0 and no
  // cancellation against e*ln2.
  const bool low = m < 0.70710678118654752440;
  m = low ? 2.0 * m : m;
  e -= static_cast<std::int64_t>(low);
  e -= subnormal ? 54 : 0;

  // log(m) = 2 atanh(s), s = (m-1)/(m+1), |s| <= 0.1716.
  const double s = (m - 1.0) / (m + 1.0);
  const double s2 = s * s;
  double w = 2.0 / 21.0;
  w = w * s2 + 2.0 / 19.0;
  w = w * s2 + 2.0 / 17.0;
  w = w * s2 + 2.0 / 15.0;
  w = w * s2 + 2.0 / 13.0;
  w = w * s2 + 2.0 / 11.0;
  w = w * s2 + 2.0 / 9.0;
  w = w * s2 + 2.0 / 7.0;
  w = w * s2 + 2.0 / 5.0;
  w = w * s2 + 2.0 / 3.0;
  const double lm = 2.0 * s + s * (s2 * w);
  const double ed = static_cast<double>(e);
  double res = ed * detail::kLn2Hi + (lm + ed * detail::kLn2Lo);

  res = x == inf ? inf : res;
  res = x == 0.0 ? -inf : res;
  res = x < 0.0 ? std::numeric_limits<double>::quiet_NaN() : res;
  res = x != x ? x : res;
  return res;
}

void fast_exp_batch(std::span<const double> in, std::span<double> out);
void fast_log_batch(std::span<const double> in, std::span<double> out);

// Math policies for kernels templated over the transcendental backend.
struct PreciseMath {
  static double exp(double x) { return std::exp(x); }
  static double log(double x) { return std::log(x); }
};

struct FastMath {
  static double exp(double x) { return fast_exp(x); }
  static double log(double x) { return fast_log(x); }
};

}  // namespace ffit::fastmath
