#include "powerlik/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "powerlik/coefficients.hpp"
#include "powerlik/specfun.hpp"

namespace powerlik::frontier {

namespace {

void check_spec(const FrontierSpec& spec) {
  if (!(spec.gamma > 0.0)) throw std::invalid_argument("FrontierSpec: gamma must be > 0");
  if (spec.n < 1) throw std::invalid_argument("FrontierSpec: n must be >= 1");
  if (!(spec.p_min > 0.0 && spec.p_min <= 1.0))
    throw std::invalid_argument("FrontierSpec: p_min must lie in (0,1]");
  if (!(spec.delta > 0.0 && spec.delta < 1.0))
    throw std::invalid_argument("FrontierSpec: delta must lie in (0,1)");
  if (!(spec.a_max >= 1.0)) throw std::invalid_argument("FrontierSpec: a_max must be >= 1");
}

double alpha_one(const FrontierSpec& spec, int m) {
  return coefficients::alpha_triad(spec.gamma, m, spec.n, 1);
}

}  // namespace

int m_need(const FrontierSpec& spec) {
  check_spec(spec);
  const double x = specfun::inv_reg_upper_inc_gamma(spec.gamma, spec.delta);
  return static_cast<int>(std::ceil(x / spec.p_min));
}

int m_cap_exact(const FrontierSpec& spec) {
  check_spec(spec);
  // alpha_1 is nondecreasing in M (every added series term is nonnegative),
  // so the admissible set is a prefix of 1..N.
  if (alpha_one(spec, 1) > spec.a_max) return 0;
  if (spec.n <= 256) {
    int best = 1;
    for (int m = 2; m <= spec.n; ++m) {
      if (alpha_one(spec, m) > spec.a_max) break;
      best = m;
    }
    return best;
  }
  int lo = 1, hi = spec.n;  // alpha_1(lo) <= a_max
  while (lo < hi) {
    const int mid = lo + (hi - lo + 1) / 2;
    if (alpha_one(spec, mid) <= spec.a_max)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

int m_cap_approx(const FrontierSpec& spec) {
  check_spec(spec);
  const double log_base = specfun::log_gamma(spec.gamma + 1.0) + std::log(spec.a_max) +
                          std::log(static_cast<double>(spec.n));
  const double approx = std::floor(std::exp(log_base / spec.gamma));
  return static_cast<int>(std::min(approx, static_cast<double>(spec.n)));
}

FrontierResult feasible_window(const FrontierSpec& spec) {
  FrontierResult result;
  result.m_need = m_need(spec);
  result.m_cap_exact = m_cap_exact(spec);
  result.m_cap_approx = m_cap_approx(spec);
  const int hi = std::min(result.m_cap_exact, spec.n);
  result.feasible = result.m_need <= hi;
  if (result.feasible) result.window = std::make_pair(result.m_need, hi);
  return result;
}

}  // namespace powerlik::frontier
