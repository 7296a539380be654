#pragma once

namespace powerlik::specfun {

// Controls iterative evaluations (incomplete-gamma series/continued fraction
// and its inverse). Direct evaluations (log_gamma, digamma, trigamma) ignore it.
struct SpecFunConfig {
  double rel_tol = 1e-12;
  int max_iter = 200;
};

// ln Gamma(x) for x > 0.
double log_gamma(double x);

// psi(x) = d/dx ln Gamma(x) for x > 0.
double digamma(double x);

// psi_1(x) = d/dx psi(x) for x > 0.
double trigamma(double x);

// Regularized upper incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s),
// for s > 0, x >= 0. Q(s, 0) = 1, strictly decreasing in x.
double reg_upper_inc_gamma(double s, double x, const SpecFunConfig& cfg = {});

// Solves Q(s, x) = q for x, given s > 0 and q in (0, 1).
// Bracketing plus Newton refinement; |Q(s, x) - q| <= rel_tol * q on return.
double inv_reg_upper_inc_gamma(double s, double q, const SpecFunConfig& cfg = {});

}  // namespace powerlik::specfun
