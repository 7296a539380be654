#pragma once

#include <optional>
#include <utility>

namespace powerlik::frontier {

// Inputs for the truncation-order analysis: tail tolerance delta on the
// relative truncation error for p >= p_min, and amplification cap a_max on
// the K = 1 update scale.
struct FrontierSpec {
  double gamma = 1.0;
  int n = 32;
  double p_min = 0.1;
  double delta = 0.05;
  double a_max = 1.0;
};

struct FrontierResult {
  int m_need = 0;
  int m_cap_exact = 0;
  int m_cap_approx = 0;
  bool feasible = false;
  std::optional<std::pair<int, int>> window;
};

// Fidelity requirement: ceil(Qinv(gamma, delta) / p_min).
int m_need(const FrontierSpec& spec);

// Largest M <= N with alpha_1^{(gamma,M,N)} <= a_max; 0 when even M = 1
// violates the cap.
int m_cap_exact(const FrontierSpec& spec);

// Asymptotic cap floor((Gamma(gamma+1) a_max N)^{1/gamma}), clamped to N.
int m_cap_approx(const FrontierSpec& spec);

// Window [m_need, min(m_cap_exact, N)] when nonempty.
FrontierResult feasible_window(const FrontierSpec& spec);

}  // namespace powerlik::frontier
