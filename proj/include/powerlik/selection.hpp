#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace powerlik::selection {

// Validation metric whose marginal value v'(p) enters the alignment sums.
struct Metric {
  enum class Kind { pass1, passk, logp };
  Kind kind = Kind::pass1;
  int k = 1;          // passk only
  double tau = 0.05;  // logp only

  static Metric pass1() { return Metric{Kind::pass1, 1, 0.05}; }
  static Metric passk(int k);
  static Metric logp(double tau);
};

// One prompt's calibration record: smoothed success estimate, sensitivity
// scalar ell, and metric marginal v'(p_hat).
struct PromptStats {
  double p_hat = 0.0;
  double ell = 0.0;
  double v_prime = 0.0;
};

enum class Provenance { counts, direct };

struct CalibrationStats {
  std::vector<PromptStats> prompts;
  Provenance provenance = Provenance::direct;
};

// Beta-smoothed success estimate (K + a) / (N + a + b), strictly interior.
double smooth_p_hat(int k, int n, double a, double b);

// v'(p) for the chosen metric: 1 for pass@1, k(1-p)^{k-1} for pass@k,
// 1/(p + tau) for smoothed log-success.
double metric_marginal(double p, const Metric& metric);

// Sensitivity proxy p_hat (1 - p_hat); callers may supply their own ell.
double ell_proxy(double p_hat);

// Builds smoothed per-prompt stats from success counts.
CalibrationStats stats_from_counts(std::span<const int> counts, int n, double a, double b,
                                   const Metric& metric);

// Alignment and step-norm sums with first and second gamma derivatives:
//   A  = sum v' ell w        B  = sum ell w^2
//   A' = sum v' ell dw       B' = 2 sum ell w dw
//   A''= sum v' ell ddw      B''= 2 sum ell (dw^2 + w ddw)
// Derivatives are populated only for gamma > 0.
struct AbCurves {
  double a = 0.0, a1 = 0.0, a2 = 0.0;
  double b = 0.0, b1 = 0.0, b2 = 0.0;
  bool has_derivatives = false;
};

AbCurves ab_curves(const CalibrationStats& stats, double gamma, int n);

// Calibrated metric gain U = A / sqrt(B), with B floored at 1e-8.
double u_value(const CalibrationStats& stats, double gamma, int n);

// Closed-form U'(gamma) = (2A'B - AB') / (2 B^{3/2}); requires gamma > 0.
double u_prime(const CalibrationStats& stats, double gamma, int n);

// Variance proxy R = sum_x [Var(a_K|x) mu2_x + E[a_K^2/K|x] tr_x] under the
// binomial success-count law at each p_hat. Empty norm spans mean all-ones.
double variance_proxy(const CalibrationStats& stats, double gamma, int n,
                      std::span<const double> norm_mu2 = {},
                      std::span<const double> tr_sigma = {});

struct SelectionConfig {
  double gamma_min = 1e-3;
  double gamma_max = 2.5;
  int grid_points = 41;
  int newton_iters = 8;
  double lambda_var = 0.0;
  Metric metric = Metric::pass1();
  double smooth_a = 1.0;
  double smooth_b = 1.0;
  int n_rollouts = 0;
  double gamma_init = 0.8;  // blended into the Newton warm start
};

enum class ChosenBy { grid, newton, boundary };

struct TracePoint {
  double gamma = 0.0;
  double u = 0.0;
  double r = 0.0;
  double objective = 0.0;
};

struct NewtonPoint {
  double gamma = 0.0;
  double f = 0.0;
  double f_prime = 0.0;
};

struct SelectionResult {
  double gamma_star = 0.0;
  std::vector<TracePoint> trace;
  std::vector<NewtonPoint> newton_path;
  ChosenBy chosen_by = ChosenBy::grid;
};

// Maximizes U(gamma) - lambda_var sqrt(R(gamma)) over [gamma_min, gamma_max]:
// grid evaluation (gamma = 0 value-only when present), projected Newton on
// F = 2A'B - AB' from the top grid candidates, overall best wins with ties
// broken toward smaller gamma.
SelectionResult select_gamma(const CalibrationStats& stats, const SelectionConfig& config);

// Per-group success counts for contiguous layouts; length must divide by n.
std::vector<int> collect_k_contiguous(std::span<const int> rewards, int n);

// Per-prompt success counts keyed by id; every id must appear exactly n times.
std::map<std::string, int> collect_k_by_id(
    std::span<const std::pair<std::string, int>> pairs, int n);

// Token-level advantages for one response sequence; mask marks response tokens.
struct TokenSequence {
  std::vector<double> advantages;
  std::vector<std::uint8_t> response_mask;
};

// Root mean square of advantages over response tokens across all sequences.
double arms(std::span<const TokenSequence> sequences);

// eta_ref * clip(arms_ref / (arms_gamma + eps_rms), clip.first, clip.second).
double calibrate_lr(double eta_ref, double arms_ref, double arms_gamma, double eps_rms,
                    std::pair<double, double> clip);

}  // namespace powerlik::selection
