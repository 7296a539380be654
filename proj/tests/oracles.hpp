#pragma once

// Test-only reference computations, independent of the library paths they
// check.

#include <cmath>
#include <functional>

namespace oracles {

// |x - y| <= tol * max(1, |x|, |y|).
inline bool approx_eq(double x, double y, double tol) {
  return std::fabs(x - y) <= tol * std::max({1.0, std::fabs(x), std::fabs(y)});
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Euler-Mascheroni constant from the harmonic sum with an Euler-Maclaurin
// tail correction; error ~ 1/(252 n^6).
inline double euler_mascheroni() {
  const int n = 100;
  double h = 0.0;
  for (int k = 1; k <= n; ++k) h += 1.0 / k;
  const double x = n;
  return h - std::log(x) - 1.0 / (2.0 * x) + 1.0 / (12.0 * x * x) -
         1.0 / (120.0 * x * x * x * x);
}

// zeta(2) by direct series plus tail correction sum_{k>n} 1/k^2 ~ 1/n - 1/(2n^2) + ...
inline double zeta2() {
  const int n = 100;
  double s = 0.0;
  for (int k = 1; k <= n; ++k) s += 1.0 / (static_cast<double>(k) * k);
  const double x = n;
  return s + 1.0 / x - 1.0 / (2.0 * x * x) + 1.0 / (6.0 * x * x * x) -
         1.0 / (30.0 * x * x * x * x * x);
}

// Q(s, x) for integer s: e^{-x} sum_{k=0}^{s-1} x^k / k!.
inline double q_upper_integer(int s, double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < s; ++k) {
    term *= x / k;
    sum += term;
  }
  return std::exp(-x) * sum;
}

}  // namespace oracles
