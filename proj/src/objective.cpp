#include "powerlik/objective.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "powerlik/specfun.hpp"

namespace powerlik::objective {

namespace {

void check_gamma_n(double gamma, int n) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("gamma must be finite and >= 0");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
}

void check_p_unit(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("p must lie in [0,1]");
}

}  // namespace

double WeightEval::dgamma() const {
  if (!has_derivatives)
    throw std::domain_error("WeightEval: derivative unavailable at gamma = 0");
  return dw;
}

double WeightEval::d2gamma() const {
  if (!has_derivatives)
    throw std::domain_error("WeightEval: derivative unavailable at gamma = 0");
  return ddw;
}

double phi(double gamma, double p) {
  if (!(p > 0.0)) throw std::domain_error("phi: requires p > 0");
  const double log_p = std::log(p);
  const double u = 1.0 - gamma;
  // (p^u - 1)/u = expm1(u log p)/u, with a series fallback across the
  // removable singularity at u = 0.
  if (std::fabs(u) < 1e-8) return log_p * (1.0 + 0.5 * u * log_p);
  return std::expm1(u * log_p) / u;
}

double pass_at_k(double p, int k) {
  check_p_unit(p);
  if (k < 1) throw std::invalid_argument("pass_at_k: requires k >= 1");
  return -std::expm1(static_cast<double>(k) * std::log1p(-p));
}

double truncated_objective(double gamma, int n, double p) {
  check_gamma_n(gamma, n);
  check_p_unit(p);
  double coeff = 1.0;  // (gamma)_{k-1} / (k-1)!
  double sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    sum += coeff / k * pass_at_k(p, k);
    coeff *= (gamma + k - 1.0) / k;
  }
  return sum;
}

double weight_value(double gamma, int n, double p) {
  check_gamma_n(gamma, n);
  check_p_unit(p);
  const double q = 1.0 - p;
  double coeff = 1.0;
  double basis = 1.0;
  double w = 1.0;
  for (int m = 1; m < n; ++m) {
    coeff *= (gamma + m - 1.0) / m;
    basis *= q;
    w += coeff * basis;
  }
  return w;
}

WeightEval weight_series(double gamma, int n, double p) {
  check_gamma_n(gamma, n);
  check_p_unit(p);
  if (gamma == 0.0) {
    // (0)_m = 0 for m >= 1, so w = 1; digamma differences are undefined here.
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return WeightEval{1.0, nan, nan, false};
  }
  const double psi0 = specfun::digamma(gamma);
  const double tri0 = specfun::trigamma(gamma);
  const double q = 1.0 - p;
  double coeff = 1.0;
  double basis = 1.0;
  double psi_m = psi0;  // psi(gamma + m), advanced by the recurrence
  double tri_m = tri0;  // trigamma(gamma + m)
  WeightEval out{1.0, 0.0, 0.0, true};
  for (int m = 1; m < n; ++m) {
    coeff *= (gamma + m - 1.0) / m;
    basis *= q;
    const double shift = gamma + m - 1.0;
    psi_m += 1.0 / shift;
    tri_m -= 1.0 / (shift * shift);
    const double delta_psi = psi_m - psi0;
    const double delta_tri = tri_m - tri0;
    const double term = coeff * basis;
    out.w += term;
    out.dw += term * delta_psi;
    out.ddw += term * (delta_psi * delta_psi + delta_tri);
  }
  return out;
}

double weight_limit(double gamma, double p) {
  if (!(p > 0.0)) throw std::domain_error("weight_limit: requires p > 0");
  return std::exp(-gamma * std::log(p));
}

}  // namespace powerlik::objective
