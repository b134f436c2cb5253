#pragma once

#include <cmath>

// Scalar helpers shared by the discretizations.

namespace heterosim::num {

// Bernoulli function B(x) = x / (exp(x) - 1), the exponential-fitting kernel.
inline double bernoulli(double x) {
  if (std::abs(x) < 1e-10) return 1.0 - 0.5 * x;
  if (x > 37.0) return x * std::exp(-x);   // exp(-x) underflows to 0 for huge x
  if (x < -37.0) return -x;
  return x / std::expm1(x);
}

// Extended-precision variant: edge fluxes are small differences of large
// B(x)*n products, and the extra mantissa keeps terminal-current sums well
// under the conservation tolerance.
inline long double bernoulli_l(long double x) {
  if (fabsl(x) < 1e-12L) return 1.0L - 0.5L * x;
  if (x > 44.0L) return x * expl(-x);
  if (x < -44.0L) return -x;
  return x / expm1l(x);
}

// dB/dx, stable over the same ranges.
inline double bernoulli_dx(double x) {
  if (std::abs(x) < 1e-6) return -0.5 + x / 6.0;
  if (x > 37.0) return (1.0 - x) * std::exp(-x);
  if (x < -37.0) return -1.0;
  const double em1 = std::expm1(x);
  const double ex = em1 + 1.0;
  return (em1 - x * ex) / (em1 * em1);
}

// exp with clamped argument; keeps Newton iterates finite while far from the solution.
inline double exp_clamped(double x, double cap = 350.0) {
  if (x > cap) return std::exp(cap);
  if (x < -cap) return std::exp(-cap);
  return std::exp(x);
}

// asymmetric clamp: deep underflow is fine, overflow is not
inline double exp_box(double x, double lo, double hi) {
  if (x > hi) return std::exp(hi);
  if (x < lo) return std::exp(lo);
  return std::exp(x);
}

inline long double exp_box_l(long double x, long double lo, long double hi) {
  if (x > hi) return expl(hi);
  if (x < lo) return expl(lo);
  return expl(x);
}

inline bool nearly_equal(double a, double b, double rel, double abs_floor = 0.0) {
  const double scale = std::max({std::abs(a), std::abs(b), abs_floor});
  return std::abs(a - b) <= rel * scale;
}

}  // namespace heterosim::num
