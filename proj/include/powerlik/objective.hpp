#pragma once

namespace powerlik::objective {

// Truncated population weight and its first two derivatives in gamma.
// Derivatives are undefined at gamma = 0 (digamma pole); there
// has_derivatives is false and dw/ddw hold NaN.
struct WeightEval {
  double w = 0.0;
  double dw = 0.0;
  double ddw = 0.0;
  bool has_derivatives = false;

  double dgamma() const;   // throws std::domain_error when unavailable
  double d2gamma() const;  // throws std::domain_error when unavailable
};

// Antiderivative of p^{-gamma}: (p^{1-gamma} - 1)/(1-gamma), continuous at
// gamma = 1 where it equals log p. Requires p > 0.
double phi(double gamma, double p);

// 1 - (1-p)^k.
double pass_at_k(double p, int k);

// sum_{k=1}^{n} ((gamma)_{k-1} / ((k-1)! k)) * pass_at_k(p, k).
double truncated_objective(double gamma, int n, double p);

// w = sum_{m=0}^{n-1} ((gamma)_m / m!) (1-p)^m, value only. Valid at gamma = 0.
double weight_value(double gamma, int n, double p);

// Weight plus d/dgamma and d^2/dgamma^2; derivative terms carry
// psi(gamma+m) - psi(gamma) and trigamma differences per coefficient.
WeightEval weight_series(double gamma, int n, double p);

// Infinite-budget reference weight p^{-gamma}. Requires p > 0.
double weight_limit(double gamma, double p);

}  // namespace powerlik::objective
