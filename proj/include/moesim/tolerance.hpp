#pragma once

#include <algorithm>
#include <cmath>

namespace moesim {

// All duration comparisons in the scheduler, simulator and replay checker use
// one tolerance discipline: relative 1e-9 with an absolute floor of 1e-15 s.
inline constexpr double kRelTol = 1e-9;
inline constexpr double kAbsTol = 1e-15;

inline double cmp_tol(double a, double b) {
  return std::max(kAbsTol, kRelTol * std::max(std::fabs(a), std::fabs(b)));
}

inline bool approx_geq(double a, double b) { return a >= b - cmp_tol(a, b); }
inline bool approx_leq(double a, double b) { return a <= b + cmp_tol(a, b); }
inline bool approx_eq(double a, double b) {
  return std::fabs(a - b) <= cmp_tol(a, b);
}
// Strictly less, beyond tolerance.
inline bool definitely_lt(double a, double b) { return !approx_geq(a, b); }

}  // namespace moesim
