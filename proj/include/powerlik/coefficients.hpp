#pragma once

#include <vector>

namespace powerlik::coefficients {

// Objective parameter gamma, rollout budget N, and optional truncation order
// M <= N (M = N selects the full family).
struct GammaConfig {
  double gamma;
  int n_rollouts;
  int m_trunc;

  GammaConfig(double gamma, int n_rollouts);
  GammaConfig(double gamma, int n_rollouts, int m_trunc);
};

// Per-success-count coefficients for one (gamma, N). Entry k-1 holds the
// value for success count K = k. Immutable once built.
struct CoefficientTable {
  GammaConfig config;
  std::vector<double> beta;   // beta[K-1], K = 1..N
  std::vector<double> alpha;  // alpha[K-1] = (K/N) * beta[K-1]
};

// Closed-form table: beta[K-1] = Gamma(N+g)/Gamma(N) * Gamma(K)/Gamma(K+g),
// evaluated through log-gamma differences. Requires m_trunc == n_rollouts.
CoefficientTable beta_table(const GammaConfig& config);

// Finite-sum form of the same coefficient,
//   sum_{m=0}^{N-K} (g)_m/m! * C(N-K,m)/C(N-1,m),
// kept as an independent route for cross-checking the closed form.
double beta_by_sum(double gamma, int n, int k);

// Group update scale alpha_K = (K/N) * beta_{K-1}.
double alpha(const GammaConfig& config, int k);

// Truncated-family scale: the beta_by_sum series cut at m = m_trunc - 1,
// times K/N. Equals alpha() when m_trunc == n.
double alpha_triad(double gamma, int m_trunc, int n, int k);

// Bernstein basis B_{m,degree}(p) = C(degree,m) p^m (1-p)^{degree-m}.
double bernstein_basis(int m, int degree, double p);

// Population weight as a Bernstein expansion: sum_j beta[j] B_{j,N-1}(p).
double weight_from_bernstein(const CoefficientTable& table, double p);

}  // namespace powerlik::coefficients
