#include "powerlik/simulator.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "powerlik/specfun.hpp"

namespace powerlik::simulator {

namespace {

// Counter-based stream: every (seed, stream) pair yields an independent
// reproducible sequence, so trials can be generated in any order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) {
    state_ = scramble(seed + 0x9E3779B97F4A7C15ull);
    state_ = scramble(state_ ^ scramble(stream + 0x632BE59BD9B4E019ull));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return scramble(state_);
  }

  // Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t scramble(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
};

}  // namespace

SyntheticPolicy::SyntheticPolicy(Eigen::VectorXd logits, std::vector<bool> correct_mask)
    : logits_(std::move(logits)), correct_(std::move(correct_mask)) {
  const auto z = logits_.size();
  if (z < 2) throw std::invalid_argument("SyntheticPolicy: needs at least 2 latent states");
  if (static_cast<std::size_t>(z) != correct_.size())
    throw std::invalid_argument("SyntheticPolicy: logits and correct_mask sizes differ");
  if (!logits_.allFinite()) throw std::invalid_argument("SyntheticPolicy: logits must be finite");

  const double max_logit = logits_.maxCoeff();
  probs_ = (logits_.array() - max_logit).exp();
  probs_ /= probs_.sum();

  cdf_.resize(static_cast<std::size_t>(z));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z; ++i) {
    acc += probs_[i];
    cdf_[static_cast<std::size_t>(i)] = acc;
  }
  cdf_.back() = 1.0;

  p_ = 0.0;
  for (Eigen::Index i = 0; i < z; ++i)
    if (correct_[static_cast<std::size_t>(i)]) p_ += probs_[i];
}

Eigen::VectorXd SyntheticPolicy::score(int z) const {
  Eigen::VectorXd s = -probs_;
  s[z] += 1.0;
  return s;
}

int SyntheticPolicy::state_for(double u) const {
  const int z = num_states();
  for (int i = 0; i < z - 1; ++i)
    if (u < cdf_[static_cast<std::size_t>(i)]) return i;
  return z - 1;
}

PolicyOracle oracle(const SyntheticPolicy& policy) {
  const int z = policy.num_states();
  const auto& probs = policy.probs();
  const double p = policy.success_prob();
  if (p <= 0.0)
    throw std::domain_error("oracle: success-conditioned moments undefined when p = 0");

  PolicyOracle out;
  out.p = p;
  out.grad_p = Eigen::VectorXd(z);
  for (int j = 0; j < z; ++j)
    out.grad_p[j] = probs[j] * ((policy.is_correct(j) ? 1.0 : 0.0) - p);
  out.mu = out.grad_p / p;

  out.sigma = Eigen::MatrixXd::Zero(z, z);
  for (int j = 0; j < z; ++j) {
    if (!policy.is_correct(j)) continue;
    const Eigen::VectorXd s = policy.score(j);
    out.sigma += (probs[j] / p) * s * s.transpose();
  }
  out.sigma -= out.mu * out.mu.transpose();
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  return out;
}

RolloutGroup sample_group(const SyntheticPolicy& policy, int n, std::uint64_t seed,
                          std::uint64_t trial) {
  if (n < 1) throw std::invalid_argument("sample_group: requires n >= 1");
  CounterRng rng(seed, trial);
  RolloutGroup group;
  group.rewards.resize(static_cast<std::size_t>(n));
  group.scores.reserve(static_cast<std::size_t>(n));
  group.states.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int z = policy.state_for(rng.next_unit());
    group.states[static_cast<std::size_t>(i)] = z;
    const bool hit = policy.is_correct(z);
    group.rewards[static_cast<std::size_t>(i)] = hit ? 1 : 0;
    group.k += hit ? 1 : 0;
    group.scores.push_back(policy.score(z));
  }
  return group;
}

namespace {

void check_table(const RolloutGroup& group, const coefficients::CoefficientTable& table) {
  if (static_cast<std::size_t>(table.config.n_rollouts) != group.rewards.size())
    throw std::invalid_argument("coefficient table N does not match group size");
}

}  // namespace

Eigen::VectorXd estimate_gradient(const RolloutGroup& group,
                                  const coefficients::CoefficientTable& table,
                                  EstimatorMode mode) {
  check_table(group, table);
  const int n = table.config.n_rollouts;
  const auto dim = group.scores.front().size();
  Eigen::VectorXd correct_sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd all_sum = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < n; ++i) {
    all_sum += group.scores[static_cast<std::size_t>(i)];
    if (group.rewards[static_cast<std::size_t>(i)])
      correct_sum += group.scores[static_cast<std::size_t>(i)];
  }
  const double beta = group.k > 0 ? table.beta[static_cast<std::size_t>(group.k - 1)] : 0.0;
  if (mode == EstimatorMode::direct) return (beta / n) * correct_sum;
  return (beta * correct_sum - all_sum) / n;
}

AdvantageVector advantage_vector(const RolloutGroup& group,
                                 const coefficients::CoefficientTable& table,
                                 EstimatorMode mode) {
  check_table(group, table);
  const int n = table.config.n_rollouts;
  AdvantageVector adv;
  adv.mode = mode;
  adv.values.resize(static_cast<std::size_t>(n));
  const double beta = group.k > 0 ? table.beta[static_cast<std::size_t>(group.k - 1)] : 0.0;
  for (int i = 0; i < n; ++i) {
    const double br = group.rewards[static_cast<std::size_t>(i)] ? beta : 0.0;
    adv.values[static_cast<std::size_t>(i)] =
        mode == EstimatorMode::direct ? br : br - 1.0;
  }
  return adv;
}

VarianceTerms analytic_variance_terms(double p, double gamma, int n) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("analytic_variance_terms: p in [0,1]");
  const coefficients::GammaConfig config(gamma, n);

  // Exact binomial pmf sums; a_0 = 0 by convention.
  double mean_a = 0.0, mean_a2 = 0.0, e_a2_over_k = 0.0;
  for (int k = 0; k <= n; ++k) {
    double pmf;
    if (p == 0.0)
      pmf = k == 0 ? 1.0 : 0.0;
    else if (p == 1.0)
      pmf = k == n ? 1.0 : 0.0;
    else {
      using specfun::log_gamma;
      const double log_choose =
          log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0);
      pmf = std::exp(log_choose + k * std::log(p) + (n - k) * std::log1p(-p));
    }
    if (k == 0 || pmf == 0.0) continue;
    const double a = coefficients::alpha(config, k);
    mean_a += pmf * a;
    mean_a2 += pmf * a * a;
    e_a2_over_k += pmf * a * a / k;
  }
  return VarianceTerms{mean_a2 - mean_a * mean_a, e_a2_over_k};
}

namespace {

struct ChunkAcc {
  Eigen::VectorXd sum_direct, sumsq_direct;
  Eigen::VectorXd sum_cv, sumsq_cv;
  Eigen::MatrixXd outer_direct, outer_cv;
  Eigen::VectorXd score_sum;
  std::vector<std::int64_t> count_by_k;
  std::vector<Eigen::VectorXd> sum_by_k;
  std::vector<double> sqnorm_by_k;

  ChunkAcc(int dim, int n)
      : sum_direct(Eigen::VectorXd::Zero(dim)),
        sumsq_direct(Eigen::VectorXd::Zero(dim)),
        sum_cv(Eigen::VectorXd::Zero(dim)),
        sumsq_cv(Eigen::VectorXd::Zero(dim)),
        outer_direct(Eigen::MatrixXd::Zero(dim, dim)),
        outer_cv(Eigen::MatrixXd::Zero(dim, dim)),
        score_sum(Eigen::VectorXd::Zero(dim)),
        count_by_k(static_cast<std::size_t>(n) + 1, 0),
        sum_by_k(static_cast<std::size_t>(n) + 1, Eigen::VectorXd::Zero(dim)),
        sqnorm_by_k(static_cast<std::size_t>(n) + 1, 0.0) {}

  void merge(const ChunkAcc& other) {
    sum_direct += other.sum_direct;
    sumsq_direct += other.sumsq_direct;
    sum_cv += other.sum_cv;
    sumsq_cv += other.sumsq_cv;
    outer_direct += other.outer_direct;
    outer_cv += other.outer_cv;
    score_sum += other.score_sum;
    for (std::size_t k = 0; k < count_by_k.size(); ++k) {
      count_by_k[k] += other.count_by_k[k];
      sum_by_k[k] += other.sum_by_k[k];
      sqnorm_by_k[k] += other.sqnorm_by_k[k];
    }
  }
};

void accumulate_trial(const SyntheticPolicy& policy, const coefficients::CoefficientTable& table,
                      std::uint64_t seed, std::int64_t trial, std::vector<int>& counts,
                      ChunkAcc& acc) {
  const int n = table.config.n_rollouts;
  const int dim = policy.num_states();
  const auto& probs = policy.probs();

  std::fill(counts.begin(), counts.end(), 0);
  CounterRng rng(seed, static_cast<std::uint64_t>(trial));
  int k = 0;
  for (int i = 0; i < n; ++i) {
    const int z = policy.state_for(rng.next_unit());
    ++counts[static_cast<std::size_t>(z)];
    if (policy.is_correct(z)) ++k;
  }

  // sum_i S_i = counts - N p ; sum_i r_i S_i = correct counts - K p.
  Eigen::VectorXd all_sum(dim), correct_sum(dim);
  for (int z = 0; z < dim; ++z) {
    const double c = counts[static_cast<std::size_t>(z)];
    all_sum[z] = c - n * probs[z];
    correct_sum[z] = (policy.is_correct(z) ? c : 0.0) - k * probs[z];
  }

  const double beta = k > 0 ? table.beta[static_cast<std::size_t>(k - 1)] : 0.0;
  const Eigen::VectorXd g_direct = (beta / n) * correct_sum;
  const Eigen::VectorXd g_cv = g_direct - all_sum / n;

  acc.sum_direct += g_direct;
  acc.sumsq_direct += g_direct.cwiseProduct(g_direct);
  acc.outer_direct += g_direct * g_direct.transpose();
  acc.sum_cv += g_cv;
  acc.sumsq_cv += g_cv.cwiseProduct(g_cv);
  acc.outer_cv += g_cv * g_cv.transpose();
  acc.score_sum += all_sum;

  const auto kk = static_cast<std::size_t>(k);
  ++acc.count_by_k[kk];
  acc.sum_by_k[kk] += g_direct;
  acc.sqnorm_by_k[kk] += g_direct.squaredNorm();
}

ModeStats finalize_mode(const Eigen::VectorXd& sum, const Eigen::VectorXd& sumsq,
                        const Eigen::MatrixXd& outer, std::int64_t trials) {
  ModeStats stats;
  const double t = static_cast<double>(trials);
  stats.mean = sum / t;
  if (trials < 2) {
    stats.component_sd =
        Eigen::VectorXd::Constant(sum.size(), std::numeric_limits<double>::infinity());
    stats.covariance = Eigen::MatrixXd::Constant(sum.size(), sum.size(),
                                                 std::numeric_limits<double>::quiet_NaN());
    return stats;
  }
  const Eigen::VectorXd var =
      ((sumsq - t * stats.mean.cwiseProduct(stats.mean)) / (t - 1.0)).cwiseMax(0.0);
  stats.component_sd = var.cwiseSqrt();
  stats.covariance = (outer - t * stats.mean * stats.mean.transpose()) / (t - 1.0);
  return stats;
}

}  // namespace

CampaignResult run_campaign(const SyntheticPolicy& policy,
                            const coefficients::CoefficientTable& table,
                            const CampaignOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("run_campaign: trials must be >= 1");
  if (options.chunk < 1) throw std::invalid_argument("run_campaign: chunk must be >= 1");
  const int n = table.config.n_rollouts;
  const int dim = policy.num_states();

  const std::int64_t n_chunks = (options.trials + options.chunk - 1) / options.chunk;
  std::vector<ChunkAcc> chunks;
  chunks.reserve(static_cast<std::size_t>(n_chunks));
  for (std::int64_t c = 0; c < n_chunks; ++c) chunks.emplace_back(dim, n);

  auto run_chunk = [&](std::int64_t c) {
    std::vector<int> counts(static_cast<std::size_t>(dim), 0);
    const std::int64_t begin = c * options.chunk;
    const std::int64_t end = std::min(options.trials, begin + options.chunk);
    for (std::int64_t t = begin; t < end; ++t)
      accumulate_trial(policy, table, options.seed, t, counts, chunks[static_cast<std::size_t>(c)]);
  };

  int threads = options.threads;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<std::int64_t>(threads, n_chunks));

  if (threads <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::int64_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) run_chunk(c);
      });
    for (auto& th : pool) th.join();
  }

  // Reduce in chunk order: totals are independent of the thread count.
  ChunkAcc total(dim, n);
  for (const auto& chunk : chunks) total.merge(chunk);

  CampaignResult result;
  result.trials = options.trials;
  result.direct = finalize_mode(total.sum_direct, total.sumsq_direct, total.outer_direct,
                                options.trials);
  result.control_variate =
      finalize_mode(total.sum_cv, total.sumsq_cv, total.outer_cv, options.trials);
  result.score_mean = total.score_sum / (static_cast<double>(options.trials) * n);

  result.by_count.count = total.count_by_k;
  result.by_count.mean.resize(static_cast<std::size_t>(n) + 1);
  result.by_count.mean_sq_norm.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::size_t k = 0; k < total.count_by_k.size(); ++k) {
    const auto cnt = total.count_by_k[k];
    result.by_count.mean[k] =
        cnt > 0 ? Eigen::VectorXd(total.sum_by_k[k] / static_cast<double>(cnt))
                : Eigen::VectorXd(Eigen::VectorXd::Zero(dim));
    result.by_count.mean_sq_norm[k] = cnt > 0 ? total.sqnorm_by_k[k] / static_cast<double>(cnt) : 0.0;
  }
  return result;
}

std::vector<int> campaign_success_counts(const SyntheticPolicy& policy, int n,
                                         std::int64_t trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("campaign_success_counts: trials must be >= 1");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(trials));
  for (std::int64_t t = 0; t < trials; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    int k = 0;
    for (int i = 0; i < n; ++i)
      if (policy.is_correct(policy.state_for(rng.next_unit()))) ++k;
    out.push_back(k);
  }
  return out;
}

CovarianceReport empirical_covariance(const SyntheticPolicy& policy,
                                      const coefficients::CoefficientTable& table,
                                      std::int64_t n_trials, std::uint64_t seed) {
  CampaignOptions options;
  options.trials = n_trials;
  options.seed = seed;
  const CampaignResult campaign = run_campaign(policy, table, options);

  const PolicyOracle om = oracle(policy);
  const VarianceTerms terms =
      analytic_variance_terms(om.p, table.config.gamma, table.config.n_rollouts);

  CovarianceReport report;
  report.total_cov = campaign.direct.covariance;
  report.count_term = terms.var_a * om.mu.squaredNorm();
  report.within_term = terms.e_a2_over_k * om.sigma.trace();
  return report;
}

}  // namespace powerlik::simulator
