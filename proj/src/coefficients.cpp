#include "powerlik/coefficients.hpp"

#include <cmath>
#include <stdexcept>

#include "powerlik/specfun.hpp"

namespace powerlik::coefficients {

namespace {

void validate(double gamma, int n, int m) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("GammaConfig: gamma must be finite and >= 0");
  if (n < 1) throw std::invalid_argument("GammaConfig: n_rollouts must be >= 1");
  if (m < 1 || m > n) throw std::invalid_argument("GammaConfig: m_trunc must be in [1, n_rollouts]");
}

void check_k(int n, int k) {
  if (k < 1 || k > n) throw std::invalid_argument("success count k must be in [1, n]");
}

// log beta_{K-1} grouped so that gamma = 0 and K = N cancel exactly.
double log_beta(double gamma, int n, int k) {
  using specfun::log_gamma;
  return (log_gamma(n + gamma) - log_gamma(k + gamma)) + (log_gamma(k) - log_gamma(n));
}

// sum_{m=0}^{upto} (g)_m/m! * C(n-k,m)/C(n-1,m), all terms nonnegative.
double truncated_sum(double gamma, int n, int k, int upto) {
  double term = 1.0;
  double sum = 1.0;
  for (int m = 1; m <= upto; ++m) {
    term *= (gamma + m - 1.0) / m * (n - k - m + 1.0) / (n - m);
    sum += term;
  }
  return sum;
}

}  // namespace

GammaConfig::GammaConfig(double gamma_in, int n_rollouts_in)
    : GammaConfig(gamma_in, n_rollouts_in, n_rollouts_in) {}

GammaConfig::GammaConfig(double gamma_in, int n_rollouts_in, int m_trunc_in)
    : gamma(gamma_in), n_rollouts(n_rollouts_in), m_trunc(m_trunc_in) {
  validate(gamma, n_rollouts, m_trunc);
}

CoefficientTable beta_table(const GammaConfig& config) {
  if (config.m_trunc != config.n_rollouts)
    throw std::invalid_argument("beta_table: closed form requires m_trunc == n_rollouts");
  const int n = config.n_rollouts;
  CoefficientTable table{config, {}, {}};
  table.beta.reserve(n);
  table.alpha.reserve(n);
  for (int k = 1; k <= n; ++k) {
    const double b = std::exp(log_beta(config.gamma, n, k));
    table.beta.push_back(b);
    table.alpha.push_back(static_cast<double>(k) / n * b);
  }
  return table;
}

double beta_by_sum(double gamma, int n, int k) {
  validate(gamma, n, n);
  check_k(n, k);
  return truncated_sum(gamma, n, k, n - k);
}

double alpha(const GammaConfig& config, int k) {
  check_k(config.n_rollouts, k);
  const int n = config.n_rollouts;
  return static_cast<double>(k) / n * std::exp(log_beta(config.gamma, n, k));
}

double alpha_triad(double gamma, int m_trunc, int n, int k) {
  validate(gamma, n, m_trunc);
  check_k(n, k);
  const int upto = std::min(m_trunc - 1, n - k);
  return static_cast<double>(k) / n * truncated_sum(gamma, n, k, upto);
}

double bernstein_basis(int m, int degree, double p) {
  if (degree < 0 || m < 0 || m > degree)
    throw std::invalid_argument("bernstein_basis: requires 0 <= m <= degree");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("bernstein_basis: requires p in [0,1]");
  if (p == 0.0) return m == 0 ? 1.0 : 0.0;
  if (p == 1.0) return m == degree ? 1.0 : 0.0;
  using specfun::log_gamma;
  const double log_choose =
      log_gamma(degree + 1.0) - log_gamma(m + 1.0) - log_gamma(degree - m + 1.0);
  return std::exp(log_choose + m * std::log(p) + (degree - m) * std::log1p(-p));
}

double weight_from_bernstein(const CoefficientTable& table, double p) {
  const int n = table.config.n_rollouts;
  double sum = 0.0;
  for (int j = 0; j < n; ++j) sum += table.beta[j] * bernstein_basis(j, n - 1, p);
  return sum;
}

}  // namespace powerlik::coefficients
