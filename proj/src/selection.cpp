#include "powerlik/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "powerlik/objective.hpp"
#include "powerlik/simulator.hpp"

namespace powerlik::selection {

namespace {

constexpr double kDenomFloor = 1e-8;
constexpr double kNewtonGammaMin = 1e-3;
constexpr double kCurvatureFloor = 1e-10;

double floored(double b) { return std::max(b, kDenomFloor); }

// Objective differences below rounding noise count as ties, so exactly
// gamma-invariant populations resolve toward the smallest candidate.
double tie_tolerance(double value) { return 1e-12 * std::max(1.0, std::fabs(value)); }

void check_stats(const CalibrationStats& stats) {
  if (stats.prompts.empty()) throw std::invalid_argument("calibration stats are empty");
}

}  // namespace

Metric Metric::passk(int k) {
  if (k < 1) throw std::invalid_argument("Metric::passk: requires k >= 1");
  return Metric{Kind::passk, k, 0.05};
}

Metric Metric::logp(double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("Metric::logp: requires tau > 0");
  return Metric{Kind::logp, 1, tau};
}

double smooth_p_hat(int k, int n, double a, double b) {
  if (n < 1 || k < 0 || k > n) throw std::invalid_argument("smooth_p_hat: requires 0 <= k <= n");
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("smooth_p_hat: requires a, b > 0");
  return (k + a) / (n + a + b);
}

double metric_marginal(double p, const Metric& metric) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("metric_marginal: p in [0,1]");
  switch (metric.kind) {
    case Metric::Kind::pass1:
      return 1.0;
    case Metric::Kind::passk:
      if (metric.k < 1) throw std::invalid_argument("metric_marginal: passk needs k >= 1");
      return metric.k * std::pow(1.0 - p, metric.k - 1);
    case Metric::Kind::logp:
      if (!(metric.tau > 0.0)) throw std::invalid_argument("metric_marginal: logp needs tau > 0");
      return 1.0 / (p + metric.tau);
  }
  throw std::invalid_argument("metric_marginal: unknown metric kind");
}

double ell_proxy(double p_hat) {
  if (!(p_hat > 0.0 && p_hat < 1.0)) throw std::domain_error("ell_proxy: p_hat in (0,1)");
  return p_hat * (1.0 - p_hat);
}

CalibrationStats stats_from_counts(std::span<const int> counts, int n, double a, double b,
                                   const Metric& metric) {
  CalibrationStats stats;
  stats.provenance = Provenance::counts;
  stats.prompts.reserve(counts.size());
  for (const int k : counts) {
    const double p_hat = smooth_p_hat(k, n, a, b);
    stats.prompts.push_back(PromptStats{p_hat, ell_proxy(p_hat), metric_marginal(p_hat, metric)});
  }
  return stats;
}

AbCurves ab_curves(const CalibrationStats& stats, double gamma, int n) {
  check_stats(stats);
  AbCurves curves;
  curves.has_derivatives = gamma > 0.0;
  for (const auto& prompt : stats.prompts) {
    const double ax = prompt.v_prime * prompt.ell;
    const double bx = prompt.ell;
    const objective::WeightEval we = objective::weight_series(gamma, n, prompt.p_hat);
    curves.a += ax * we.w;
    curves.b += bx * we.w * we.w;
    if (curves.has_derivatives) {
      curves.a1 += ax * we.dw;
      curves.a2 += ax * we.ddw;
      curves.b1 += 2.0 * bx * we.w * we.dw;
      curves.b2 += 2.0 * bx * (we.dw * we.dw + we.w * we.ddw);
    }
  }
  return curves;
}

double u_value(const CalibrationStats& stats, double gamma, int n) {
  const AbCurves c = ab_curves(stats, gamma, n);
  return c.a / std::sqrt(floored(c.b));
}

double u_prime(const CalibrationStats& stats, double gamma, int n) {
  const AbCurves c = ab_curves(stats, gamma, n);
  if (!c.has_derivatives)
    throw std::domain_error("u_prime: derivatives unavailable at gamma = 0");
  const double b = floored(c.b);
  return (2.0 * c.a1 * c.b - c.a * c.b1) / (2.0 * b * std::sqrt(b));
}

double variance_proxy(const CalibrationStats& stats, double gamma, int n,
                      std::span<const double> norm_mu2, std::span<const double> tr_sigma) {
  check_stats(stats);
  if (!norm_mu2.empty() && norm_mu2.size() != stats.prompts.size())
    throw std::invalid_argument("variance_proxy: norm_mu2 size mismatch");
  if (!tr_sigma.empty() && tr_sigma.size() != stats.prompts.size())
    throw std::invalid_argument("variance_proxy: tr_sigma size mismatch");
  double r = 0.0;
  for (std::size_t i = 0; i < stats.prompts.size(); ++i) {
    const auto terms = simulator::analytic_variance_terms(stats.prompts[i].p_hat, gamma, n);
    const double mu2 = norm_mu2.empty() ? 1.0 : norm_mu2[i];
    const double tr = tr_sigma.empty() ? 1.0 : tr_sigma[i];
    if (!(mu2 >= 0.0) || !(tr >= 0.0))
      throw std::invalid_argument("variance_proxy: norm factors must be nonnegative");
    r += terms.var_a * mu2 + terms.e_a2_over_k * tr;
  }
  return r;
}

namespace {

struct ObjectiveEval {
  double u = 0.0;
  double r = 0.0;
  double objective = 0.0;
};

ObjectiveEval eval_objective(const CalibrationStats& stats, const SelectionConfig& config,
                             double gamma) {
  ObjectiveEval e;
  e.u = u_value(stats, gamma, config.n_rollouts);
  e.r = variance_proxy(stats, gamma, config.n_rollouts);
  e.objective = e.u - config.lambda_var * std::sqrt(e.r);
  return e;
}

struct FEval {
  double f = 0.0;
  double f_prime = 0.0;
};

FEval eval_f(const CalibrationStats& stats, const SelectionConfig& config, double gamma) {
  const AbCurves c = ab_curves(stats, gamma, config.n_rollouts);
  const double b = floored(c.b);
  FEval e;
  e.f = 2.0 * c.a1 * b - c.a * c.b1;
  e.f_prime = 2.0 * c.a2 * b + c.a1 * c.b1 - c.a * c.b2;
  return e;
}

void check_config(const SelectionConfig& config) {
  if (!(config.gamma_min >= 0.0) || !(config.gamma_min < config.gamma_max))
    throw std::invalid_argument("select_gamma: requires 0 <= gamma_min < gamma_max");
  if (config.grid_points < 2) throw std::invalid_argument("select_gamma: grid_points >= 2");
  if (config.newton_iters < 0) throw std::invalid_argument("select_gamma: newton_iters >= 0");
  if (!(config.lambda_var >= 0.0)) throw std::invalid_argument("select_gamma: lambda_var >= 0");
  if (config.n_rollouts < 1) throw std::invalid_argument("select_gamma: n_rollouts >= 1");
}

}  // namespace

SelectionResult select_gamma(const CalibrationStats& stats, const SelectionConfig& config) {
  check_stats(stats);
  check_config(config);

  SelectionResult result;
  const int points = config.grid_points;
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] =
        config.gamma_min +
        (config.gamma_max - config.gamma_min) * static_cast<double>(i) / (points - 1);
  grid.back() = config.gamma_max;

  // Grid pass. gamma = 0, when the interval includes it, is evaluated
  // value-only; Newton starts are restricted to strictly positive gamma.
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ObjectiveEval e = eval_objective(stats, config, grid[i]);
    result.trace.push_back(TracePoint{grid[i], e.u, e.r, e.objective});
    if (result.trace[i].objective >
        result.trace[best].objective + tie_tolerance(result.trace[best].objective))
      best = i;
  }

  // Newton refinement of the unpenalized criterion from the strongest grid
  // candidates, each blended with gamma_init.
  const double newton_lo = std::max(config.gamma_min, kNewtonGammaMin);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] > 0.0) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
    return result.trace[lhs].objective > result.trace[rhs].objective;
  });
  if (order.size() > 3) order.resize(3);

  struct Endpoint {
    double gamma;
    ObjectiveEval eval;
  };
  std::vector<Endpoint> endpoints;
  for (const std::size_t idx : order) {
    double g = std::clamp(0.5 * grid[idx] + 0.5 * config.gamma_init, newton_lo, config.gamma_max);
    for (int iter = 0; iter < config.newton_iters; ++iter) {
      const FEval fe = eval_f(stats, config, g);
      result.newton_path.push_back(NewtonPoint{g, fe.f, fe.f_prime});
      if (std::fabs(fe.f_prime) < kCurvatureFloor) break;
      const double candidate = std::clamp(g - fe.f / fe.f_prime, newton_lo, config.gamma_max);
      if (!std::isfinite(candidate)) break;
      g = candidate;
    }
    const FEval fe = eval_f(stats, config, g);
    result.newton_path.push_back(NewtonPoint{g, fe.f, fe.f_prime});
    endpoints.push_back(Endpoint{g, eval_objective(stats, config, g)});
  }

  // Overall best: grid values first (ascending gamma, first max wins), then
  // Newton endpoints must strictly improve to take over.
  double best_gamma = grid[best];
  double best_objective = result.trace[best].objective;
  bool newton_won = false;
  for (const auto& ep : endpoints) {
    result.trace.push_back(TracePoint{ep.gamma, ep.eval.u, ep.eval.r, ep.eval.objective});
    if (ep.eval.objective > best_objective + tie_tolerance(best_objective)) {
      best_objective = ep.eval.objective;
      best_gamma = ep.gamma;
      newton_won = true;
    }
  }

  result.gamma_star = best_gamma;
  if (newton_won)
    result.chosen_by = ChosenBy::newton;
  else if (best == 0 || best + 1 == grid.size())
    result.chosen_by = ChosenBy::boundary;
  else
    result.chosen_by = ChosenBy::grid;
  return result;
}

std::vector<int> collect_k_contiguous(std::span<const int> rewards, int n) {
  if (n < 1) throw std::invalid_argument("collect_k_contiguous: requires n >= 1");
  if (rewards.size() % static_cast<std::size_t>(n) != 0)
    throw std::invalid_argument("collect_k_contiguous: reward count " +
                                std::to_string(rewards.size()) + " is not a multiple of N = " +
                                std::to_string(n));
  std::vector<int> out;
  out.reserve(rewards.size() / static_cast<std::size_t>(n));
  for (std::size_t base = 0; base < rewards.size(); base += static_cast<std::size_t>(n)) {
    int k = 0;
    for (int i = 0; i < n; ++i) {
      const int r = rewards[base + static_cast<std::size_t>(i)];
      if (r != 0 && r != 1)
        throw std::invalid_argument("collect_k_contiguous: rewards must be 0 or 1");
      k += r;
    }
    out.push_back(k);
  }
  return out;
}

std::map<std::string, int> collect_k_by_id(std::span<const std::pair<std::string, int>> pairs,
                                           int n) {
  if (n < 1) throw std::invalid_argument("collect_k_by_id: requires n >= 1");
  std::map<std::string, int> sums;
  std::map<std::string, int> counts;
  for (const auto& [id, reward] : pairs) {
    if (reward != 0 && reward != 1)
      throw std::invalid_argument("collect_k_by_id: rewards must be 0 or 1");
    sums[id] += reward;
    counts[id] += 1;
  }
  for (const auto& [id, count] : counts)
    if (count != n)
      throw std::invalid_argument("prompt " + id + " has " + std::to_string(count) +
                                  " responses, expected " + std::to_string(n));
  return sums;
}

double arms(std::span<const TokenSequence> sequences) {
  double sum_sq = 0.0;
  std::int64_t tokens = 0;
  for (const auto& seq : sequences) {
    if (seq.advantages.size() != seq.response_mask.size())
      throw std::invalid_argument("arms: advantage and mask lengths differ");
    for (std::size_t t = 0; t < seq.advantages.size(); ++t) {
      if (!seq.response_mask[t]) continue;
      sum_sq += seq.advantages[t] * seq.advantages[t];
      ++tokens;
    }
  }
  if (tokens == 0) throw std::invalid_argument("arms: no response tokens");
  return std::sqrt(sum_sq / static_cast<double>(tokens));
}

double calibrate_lr(double eta_ref, double arms_ref, double arms_gamma, double eps_rms,
                    std::pair<double, double> clip) {
  if (!(eta_ref > 0.0)) throw std::invalid_argument("calibrate_lr: eta_ref > 0");
  if (!(eps_rms > 0.0)) throw std::invalid_argument("calibrate_lr: eps_rms > 0");
  if (!(arms_ref >= 0.0) || !(arms_gamma >= 0.0))
    throw std::invalid_argument("calibrate_lr: ARMS values must be nonnegative");
  if (!(clip.first <= clip.second)) throw std::invalid_argument("calibrate_lr: clip lo > hi");
  const double multiplier = std::clamp(arms_ref / (arms_gamma + eps_rms), clip.first, clip.second);
  return eta_ref * multiplier;
}

}  // namespace powerlik::selection
