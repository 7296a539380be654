#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "powerlik/coefficients.hpp"
#include "powerlik/csvfmt.hpp"
#include "powerlik/errors.hpp"
#include "powerlik/frontier.hpp"
#include "powerlik/objective.hpp"
#include "powerlik/selection.hpp"
#include "powerlik/simulator.hpp"

namespace {

using powerlik::format_double;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw powerlik::io_error("cannot open output file: " + path);
  out << content;
  out.flush();
  if (!out) throw powerlik::io_error("failed while writing: " + path);
}

// ---------------------------------------------------------------- table ----

struct TableArgs {
  double gamma = 1.0;
  int n = 32;
  std::string out;
};

void run_table(const TableArgs& args) {
  const auto table = powerlik::coefficients::beta_table(
      powerlik::coefficients::GammaConfig(args.gamma, args.n));
  std::string csv = "K,beta,alpha\n";
  for (int k = 1; k <= args.n; ++k) {
    csv += std::to_string(k);
    csv += ',';
    csv += format_double(table.beta[static_cast<std::size_t>(k - 1)]);
    csv += ',';
    csv += format_double(table.alpha[static_cast<std::size_t>(k - 1)]);
    csv += '\n';
  }
  write_text_file(args.out, csv);
}

// -------------------------------------------------------------- weights ----

struct WeightsArgs {
  double gamma = 1.0;
  int n = 32;
  double p_min = 0.0;
  double p_max = 1.0;
  int p_points = 101;
  std::string out;
};

void run_weights(const WeightsArgs& args) {
  if (args.p_points < 2) throw std::invalid_argument("weights: p-points must be >= 2");
  if (!(args.p_min >= 0.0 && args.p_min < args.p_max && args.p_max <= 1.0))
    throw std::invalid_argument("weights: requires 0 <= p-min < p-max <= 1");
  std::string csv = "p,w,dw,ddw,w_limit\n";
  for (int i = 0; i < args.p_points; ++i) {
    double p = args.p_min + (args.p_max - args.p_min) * i / (args.p_points - 1);
    if (i + 1 == args.p_points) p = args.p_max;
    const auto we = powerlik::objective::weight_series(args.gamma, args.n, p);
    double limit;
    if (p > 0.0)
      limit = powerlik::objective::weight_limit(args.gamma, p);
    else
      limit = args.gamma == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    csv += format_double(p);
    csv += ',';
    csv += format_double(we.w);
    csv += ',';
    if (we.has_derivatives) csv += format_double(we.dw);
    csv += ',';
    if (we.has_derivatives) csv += format_double(we.ddw);
    csv += ',';
    csv += format_double(limit);
    csv += '\n';
  }
  write_text_file(args.out, csv);
}

// ------------------------------------------------------------- simulate ----

struct SimulateArgs {
  std::vector<double> gammas{1.0};
  int n = 8;
  long long trials = 100000;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<double> logits;
  std::vector<int> correct;
  double trace_rtol = 0.05;
  std::string out;
  std::string counts_out;
};

powerlik::simulator::SyntheticPolicy build_policy(const std::vector<double>& logits,
                                                  const std::vector<int>& correct) {
  if (logits.size() != correct.size())
    throw std::invalid_argument("simulate: --logits and --correct lengths differ");
  Eigen::VectorXd theta(static_cast<Eigen::Index>(logits.size()));
  std::vector<bool> mask(correct.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    theta[static_cast<Eigen::Index>(i)] = logits[i];
    if (correct[i] != 0 && correct[i] != 1)
      throw std::invalid_argument("simulate: --correct entries must be 0 or 1");
    mask[i] = correct[i] == 1;
  }
  return powerlik::simulator::SyntheticPolicy(std::move(theta), std::move(mask));
}

void run_simulate(const SimulateArgs& args) {
  namespace sim = powerlik::simulator;
  if (args.trials < 1) throw std::invalid_argument("simulate: trials must be >= 1");
  const sim::SyntheticPolicy policy = build_policy(args.logits, args.correct);
  const sim::PolicyOracle oracle = sim::oracle(policy);

  std::string csv =
      "gamma,mode,trials,mean_error_norm,ci_radius,emp_trace,count_term,within_term,"
      "mean_ok,trace_ok\n";
  for (const double gamma : args.gammas) {
    const auto table = powerlik::coefficients::beta_table(
        powerlik::coefficients::GammaConfig(gamma, args.n));
    sim::CampaignOptions options;
    options.trials = args.trials;
    options.seed = args.seed;
    options.threads = args.threads;
    const sim::CampaignResult campaign = sim::run_campaign(policy, table, options);

    const double w = powerlik::objective::weight_value(gamma, args.n, oracle.p);
    const Eigen::VectorXd expected = w * oracle.grad_p;
    const auto terms = sim::analytic_variance_terms(oracle.p, gamma, args.n);
    const double count_term = terms.var_a * oracle.mu.squaredNorm();
    const double within_term = terms.e_a2_over_k * oracle.sigma.trace();

    const bool have_spread = args.trials >= 2;
    for (const sim::EstimatorMode mode :
         {sim::EstimatorMode::direct, sim::EstimatorMode::control_variate}) {
      const sim::ModeStats& stats =
          mode == sim::EstimatorMode::direct ? campaign.direct : campaign.control_variate;
      const double err = (stats.mean - expected).norm();
      const double ci = have_spread
                            ? 4.0 * std::sqrt(stats.component_sd.squaredNorm() /
                                              static_cast<double>(args.trials))
                            : std::numeric_limits<double>::infinity();
      const double emp_trace = stats.covariance.trace();
      const bool mean_ok = err <= ci;

      csv += format_double(gamma);
      csv += mode == sim::EstimatorMode::direct ? ",direct," : ",control_variate,";
      csv += std::to_string(args.trials);
      csv += ',';
      csv += format_double(err);
      csv += ',';
      csv += format_double(ci);
      csv += ',';
      csv += format_double(emp_trace);
      csv += ',';
      if (mode == sim::EstimatorMode::direct) {
        const double analytic = count_term + within_term;
        const bool trace_ok =
            !have_spread || std::fabs(emp_trace - analytic) <= args.trace_rtol * analytic;
        csv += format_double(count_term);
        csv += ',';
        csv += format_double(within_term);
        csv += ',';
        csv += mean_ok ? '1' : '0';
        csv += ',';
        csv += trace_ok ? '1' : '0';
      } else {
        // The count/within decomposition applies to the direct form only.
        csv += ",,";
        csv += mean_ok ? '1' : '0';
        csv += ',';
      }
      csv += '\n';
    }
  }
  write_text_file(args.out, csv);

  if (!args.counts_out.empty()) {
    const std::vector<int> counts =
        sim::campaign_success_counts(policy, args.n, args.trials, args.seed);
    std::string counts_csv = "prompt_id,K,N\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
      counts_csv += std::to_string(i);
      counts_csv += ',';
      counts_csv += std::to_string(counts[i]);
      counts_csv += ',';
      counts_csv += std::to_string(args.n);
      counts_csv += '\n';
    }
    write_text_file(args.counts_out, counts_csv);
  }
}

// --------------------------------------------------------------- select ----

struct SelectArgs {
  std::string counts_path;
  std::string out;
  double lambda_var = 0.0;
  double gamma_min = 1e-3;
  double gamma_max = 2.5;
  int grid_points = 41;
  int newton_iters = 8;
  double gamma_init = 0.8;
  double smooth_a = 1.0;
  double smooth_b = 1.0;
  std::string metric = "pass1";
  int metric_k = 4;
  double metric_tau = 0.05;
};

struct CountsFile {
  std::vector<int> counts;
  int n = 0;
};

CountsFile parse_counts_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw powerlik::io_error("cannot open counts file: " + path);
  CountsFile file;
  file.n = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line == "prompt_id,K,N") continue;
    const auto where = [&] { return "counts file line " + std::to_string(line_no) + ": "; };
    std::istringstream fields(line);
    std::string id, k_str, n_str, extra;
    if (!std::getline(fields, id, ',') || !std::getline(fields, k_str, ',') ||
        !std::getline(fields, n_str, ',') || std::getline(fields, extra, ','))
      throw std::invalid_argument(where() + "expected prompt_id,K,N");
    int k = 0, n = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(k_str, &used);
      if (used != k_str.size()) throw std::invalid_argument("trailing characters");
      n = std::stoi(n_str, &used);
      if (used != n_str.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument(where() + "K and N must be integers");
    }
    if (n < 1) throw std::invalid_argument(where() + "N must be >= 1");
    if (k < 0 || k > n)
      throw std::invalid_argument(where() + "K = " + std::to_string(k) +
                                  " outside [0, N = " + std::to_string(n) + "]");
    if (file.n == -1)
      file.n = n;
    else if (n != file.n)
      throw std::invalid_argument(where() + "N = " + std::to_string(n) +
                                  " differs from earlier N = " + std::to_string(file.n));
    file.counts.push_back(k);
  }
  if (file.counts.empty()) throw std::invalid_argument("counts file has no records: " + path);
  return file;
}

powerlik::selection::Metric parse_metric(const SelectArgs& args) {
  using powerlik::selection::Metric;
  if (args.metric == "pass1") return Metric::pass1();
  if (args.metric == "passk") return Metric::passk(args.metric_k);
  if (args.metric == "logp") return Metric::logp(args.metric_tau);
  throw std::invalid_argument("select: unknown metric '" + args.metric +
                              "' (expected pass1, passk, or logp)");
}

void run_select(const SelectArgs& args) {
  namespace sel = powerlik::selection;
  const CountsFile file = parse_counts_file(args.counts_path);
  const sel::Metric metric = parse_metric(args);
  const sel::CalibrationStats stats =
      sel::stats_from_counts(file.counts, file.n, args.smooth_a, args.smooth_b, metric);

  sel::SelectionConfig config;
  config.gamma_min = args.gamma_min;
  config.gamma_max = args.gamma_max;
  config.grid_points = args.grid_points;
  config.newton_iters = args.newton_iters;
  config.lambda_var = args.lambda_var;
  config.metric = metric;
  config.smooth_a = args.smooth_a;
  config.smooth_b = args.smooth_b;
  config.n_rollouts = file.n;
  config.gamma_init = args.gamma_init;

  const sel::SelectionResult result = sel::select_gamma(stats, config);

  std::string csv = "gamma,U,R,objective\n";
  for (const auto& point : result.trace) {
    csv += format_double(point.gamma);
    csv += ',';
    csv += format_double(point.u);
    csv += ',';
    csv += format_double(point.r);
    csv += ',';
    csv += format_double(point.objective);
    csv += '\n';
  }
  write_text_file(args.out, csv);

  const char* chosen = result.chosen_by == sel::ChosenBy::grid
                           ? "grid"
                           : result.chosen_by == sel::ChosenBy::newton ? "newton" : "boundary";
  std::cout << "gamma_star=" << format_double(result.gamma_star) << " chosen_by=" << chosen
            << "\n";
}

// ------------------------------------------------------------- frontier ----

struct FrontierArgs {
  std::vector<double> gammas;
  int n = 32;
  double p_min = 0.1;
  double delta = 0.05;
  double a_max = 1.0;
  std::string out;
};

void run_frontier(const FrontierArgs& args) {
  std::string csv = "gamma,m_need,m_cap_exact,m_cap_approx,feasible\n";
  for (const double gamma : args.gammas) {
    powerlik::frontier::FrontierSpec spec;
    spec.gamma = gamma;
    spec.n = args.n;
    spec.p_min = args.p_min;
    spec.delta = args.delta;
    spec.a_max = args.a_max;
    const auto result = powerlik::frontier::feasible_window(spec);
    csv += format_double(gamma);
    csv += ',';
    csv += std::to_string(result.m_need);
    csv += ',';
    csv += std::to_string(result.m_cap_exact);
    csv += ',';
    csv += std::to_string(result.m_cap_approx);
    csv += ',';
    csv += result.feasible ? '1' : '0';
    csv += '\n';
  }
  write_text_file(args.out, csv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-rollout surrogate objectives for binary-reward policy gradients"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read option defaults from an INI file");

  TableArgs table_args;
  auto* table = app.add_subcommand("table", "Emit the (K, beta, alpha) coefficient table");
  table->add_option("--gamma", table_args.gamma, "Objective parameter gamma (>= 0)");
  table->add_option("--n", table_args.n, "Rollout budget N")->check(CLI::PositiveNumber);
  table->add_option("--out", table_args.out, "Output CSV path")->required();
  table->callback([&] { run_table(table_args); });

  WeightsArgs weights_args;
  auto* weights = app.add_subcommand("weights", "Emit weight curves (p, w, dw, ddw, w_limit)");
  weights->add_option("--gamma", weights_args.gamma, "Objective parameter gamma (>= 0)");
  weights->add_option("--n", weights_args.n, "Rollout budget N")->check(CLI::PositiveNumber);
  weights->add_option("--p-min", weights_args.p_min, "Grid start");
  weights->add_option("--p-max", weights_args.p_max, "Grid end");
  weights->add_option("--p-points", weights_args.p_points, "Grid size");
  weights->add_option("--out", weights_args.out, "Output CSV path")->required();
  weights->callback([&] { run_weights(weights_args); });

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand(
      "simulate", "Monte-Carlo estimator verification on a categorical policy");
  simulate->add_option("--gammas", sim_args.gammas, "Gamma values")->delimiter(',');
  simulate->add_option("--n", sim_args.n, "Rollout budget N")->check(CLI::PositiveNumber);
  simulate->add_option("--trials", sim_args.trials, "Number of rollout groups")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_args.seed, "Base RNG seed");
  simulate->add_option("--threads", sim_args.threads, "Worker threads (0 = auto)");
  simulate->add_option("--logits", sim_args.logits, "Latent-state logits")
      ->delimiter(',')
      ->required();
  simulate->add_option("--correct", sim_args.correct, "Per-state 0/1 correctness mask")
      ->delimiter(',')
      ->required();
  simulate->add_option("--trace-rtol", sim_args.trace_rtol,
                       "Relative tolerance for the covariance-trace check");
  simulate->add_option("--out", sim_args.out, "Report CSV path")->required();
  simulate->add_option("--counts-out", sim_args.counts_out,
                       "Also write per-group success counts (prompt_id,K,N)");
  simulate->callback([&] { run_simulate(sim_args); });

  SelectArgs select_args;
  auto* select = app.add_subcommand("select", "Pick gamma from a success-count log");
  select->add_option("--counts", select_args.counts_path, "Counts CSV (prompt_id,K,N)")
      ->required();
  select->add_option("--out", select_args.out, "Trace CSV path")->required();
  select->add_option("--lambda-var", select_args.lambda_var, "Variance penalty weight")
      ->required();
  select->add_option("--gamma-min", select_args.gamma_min, "Candidate interval start");
  select->add_option("--gamma-max", select_args.gamma_max, "Candidate interval end");
  select->add_option("--grid-points", select_args.grid_points, "Grid size");
  select->add_option("--newton-iters", select_args.newton_iters, "Newton iteration cap");
  select->add_option("--gamma-init", select_args.gamma_init, "Warm-start blend point");
  select->add_option("--smooth-a", select_args.smooth_a, "Beta-prior a");
  select->add_option("--smooth-b", select_args.smooth_b, "Beta-prior b");
  select->add_option("--metric", select_args.metric, "pass1 | passk | logp");
  select->add_option("--metric-k", select_args.metric_k, "k for passk");
  select->add_option("--metric-tau", select_args.metric_tau, "tau for logp");
  select->callback([&] { run_select(select_args); });

  FrontierArgs frontier_args;
  auto* frontier = app.add_subcommand("frontier", "Truncation-order window sweep");
  frontier->add_option("--gammas", frontier_args.gammas, "Gamma grid (may be empty)")
      ->delimiter(',');
  frontier->add_option("--n", frontier_args.n, "Rollout budget N")->check(CLI::PositiveNumber);
  frontier->add_option("--p-min", frontier_args.p_min, "Fidelity floor on p");
  frontier->add_option("--delta", frontier_args.delta, "Relative tail tolerance");
  frontier->add_option("--a-max", frontier_args.a_max, "Low-K amplification cap");
  frontier->add_option("--out", frontier_args.out, "Output CSV path")->required();
  frontier->callback([&] { run_frontier(frontier_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const powerlik::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const powerlik::numerics_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
