#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "powerlik/coefficients.hpp"

namespace powerlik::simulator {

// Categorical latent-rollout policy: one softmax over a small finite latent
// space, each state marked correct or incorrect. Small enough that success
// probability, its gradient, and success-conditioned moments are exact
// enumerations. Immutable after construction.
class SyntheticPolicy {
 public:
  SyntheticPolicy(Eigen::VectorXd logits, std::vector<bool> correct_mask);

  int num_states() const { return static_cast<int>(probs_.size()); }
  const Eigen::VectorXd& probs() const { return probs_; }
  bool is_correct(int z) const { return correct_[static_cast<std::size_t>(z)]; }
  double success_prob() const { return p_; }

  // Score S(z) = grad_theta log softmax(theta)_z = e_z - probs.
  Eigen::VectorXd score(int z) const;

  // Index of the state containing unit u in [0,1) under the categorical CDF.
  int state_for(double u) const;

 private:
  Eigen::VectorXd logits_;
  std::vector<bool> correct_;
  Eigen::VectorXd probs_;
  std::vector<double> cdf_;
  double p_;
};

// Exact moments of the policy: success probability p, its gradient,
// mu = grad log p, and the success-conditioned score covariance.
struct PolicyOracle {
  double p = 0.0;
  Eigen::VectorXd grad_p;
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

// Enumerates the latent space. Throws std::domain_error when p = 0, where
// mu and sigma are undefined.
PolicyOracle oracle(const SyntheticPolicy& policy);

// One sampled rollout group: N binary rewards, success count, scores.
struct RolloutGroup {
  std::vector<std::uint8_t> rewards;
  int k = 0;
  std::vector<Eigen::VectorXd> scores;
  std::vector<int> states;
};

// N i.i.d. draws from the policy. Deterministic given (seed, trial); the same
// (seed, trial) keys drive the Monte-Carlo campaign below, so groups can be
// replayed one at a time.
RolloutGroup sample_group(const SyntheticPolicy& policy, int n, std::uint64_t seed,
                          std::uint64_t trial = 0);

enum class EstimatorMode { direct, control_variate };

// Group gradient estimate.
//   direct:          (beta_{K-1}/N) sum_i r_i S_i, zero when K = 0.
//   control_variate: (1/N) sum_i (beta_{K-1} r_i - 1) S_i, with the beta term
//                    dropped when K = 0 (leaving -mean score).
Eigen::VectorXd estimate_gradient(const RolloutGroup& group,
                                  const coefficients::CoefficientTable& table,
                                  EstimatorMode mode);

// Per-rollout sequence-level advantages for the same two estimator forms.
struct AdvantageVector {
  std::vector<double> values;
  EstimatorMode mode = EstimatorMode::direct;
};

AdvantageVector advantage_vector(const RolloutGroup& group,
                                 const coefficients::CoefficientTable& table,
                                 EstimatorMode mode);

// Exact binomial-law moments of the group scale a_K = alpha_K 1{K>=1}:
// Var(a_K) and E[a_K^2 / K] (the K = 0 term contributes zero).
struct VarianceTerms {
  double var_a = 0.0;
  double e_a2_over_k = 0.0;
};

VarianceTerms analytic_variance_terms(double p, double gamma, int n);

// Monte-Carlo campaign over independent rollout groups. Trials are keyed by
// (seed, trial index) and accumulated in fixed-size chunks that are reduced
// in index order, so results are identical for any thread count.
struct CampaignOptions {
  std::int64_t trials = 100000;
  std::uint64_t seed = 0;
  int threads = 0;           // 0 = hardware concurrency
  std::int64_t chunk = 8192;
};

struct ModeStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd component_sd;  // sample sd per component; +inf when trials < 2
  Eigen::MatrixXd covariance;    // sample covariance; NaN entries when trials < 2
};

// Statistics of the direct estimator conditioned on the observed K.
struct ConditionalStats {
  std::vector<std::int64_t> count;      // index K = 0..N
  std::vector<Eigen::VectorXd> mean;    // mean estimate given K
  std::vector<double> mean_sq_norm;     // E[||g||^2 | K]
};

struct CampaignResult {
  std::int64_t trials = 0;
  ModeStats direct;
  ModeStats control_variate;
  ConditionalStats by_count;
  Eigen::VectorXd score_mean;  // mean of S_i over every sampled rollout
};

CampaignResult run_campaign(const SyntheticPolicy& policy,
                            const coefficients::CoefficientTable& table,
                            const CampaignOptions& options);

// Success counts of the first `trials` campaign groups, replayed with the
// same (seed, trial) keys.
std::vector<int> campaign_success_counts(const SyntheticPolicy& policy, int n,
                                         std::int64_t trials, std::uint64_t seed);

// Empirical covariance of the direct estimator next to the two analytic
// variance contributions: Var(a_K) ||mu||^2 and E[a_K^2/K] tr(Sigma).
struct CovarianceReport {
  Eigen::MatrixXd total_cov;
  double count_term = 0.0;
  double within_term = 0.0;
};

CovarianceReport empirical_covariance(const SyntheticPolicy& policy,
                                      const coefficients::CoefficientTable& table,
                                      std::int64_t n_trials, std::uint64_t seed);

}  // namespace powerlik::simulator
