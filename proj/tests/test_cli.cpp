#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "cli_util.hpp"
#include "powerlik/csvfmt.hpp"
#include "powerlik/selection.hpp"
#include "powerlik/simulator.hpp"

using cli_util::read_file;
using cli_util::run_cli;
using cli_util::scratch_dir;

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (const char c : text) {
    if (c == '\n') {
      lines.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

}  // namespace

TEST_CASE("table output matches the golden file") {
  const auto dir = scratch_dir();
  const auto out = (dir / "table.csv").string();
  REQUIRE(run_cli("table --gamma 1 --n 4 --out " + out) == 0);
  CHECK(read_file(out) == read_file(std::string(GOLDEN_DIR) + "/table_gamma1_n4.csv"));
}

TEST_CASE("frontier sweep matches the golden file") {
  const auto dir = scratch_dir();
  const auto out = (dir / "frontier.csv").string();
  REQUIRE(run_cli("frontier --gammas 0.25,0.5,0.75,1,1.25,1.5,2,2.5,3 --n 32 "
                  "--p-min 0.1 --delta 0.05 --a-max 2 --out " +
                  out) == 0);
  CHECK(read_file(out) == read_file(std::string(GOLDEN_DIR) + "/frontier_n32.csv"));
}

TEST_CASE("degenerate one-rollout budget") {
  const auto dir = scratch_dir();
  const auto out = (dir / "table_n1.csv").string();
  REQUIRE(run_cli("table --gamma 1 --n 1 --out " + out) == 0);
  CHECK(read_file(out) == "K,beta,alpha\n1,1,1\n");
}

TEST_CASE("saturated counts tie-break toward the interval start") {
  const auto dir = scratch_dir();
  const auto counts = (dir / "full.csv").string();
  std::string body = "prompt_id,K,N\n";
  for (int i = 0; i < 12; ++i) body += "p" + std::to_string(i) + ",8,8\n";
  cli_util::write_file(counts, body);
  const auto stdout_path = (dir / "full_out.txt").string();
  REQUIRE(run_cli("select --counts " + counts + " --lambda-var 0 --out " +
                      (dir / "full_trace.csv").string(),
                  stdout_path) == 0);
  CHECK(read_file(stdout_path).rfind("gamma_star=0.001 ", 0) == 0);
}

TEST_CASE("frontier with an empty grid emits only the header") {
  const auto dir = scratch_dir();
  const auto out = (dir / "frontier_empty.csv").string();
  REQUIRE(run_cli("frontier --n 32 --out " + out) == 0);
  CHECK(read_file(out) == "gamma,m_need,m_cap_exact,m_cap_approx,feasible\n");
}

TEST_CASE("every subcommand is byte-reproducible") {
  const auto dir = scratch_dir();
  const std::string policy = "--logits 0.4,-0.3,0.8,0.1 --correct 1,0,0,1";
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"table --gamma 1.5 --n 16", "t"},
      {"weights --gamma 1.5 --n 16 --p-points 11", "w"},
      {"simulate --gammas 0.5,1 --n 4 --trials 2000 --seed 99 " + policy, "s"},
      {"frontier --gammas 0.5,1,2 --n 32", "f"},
  };
  for (const auto& [args, tag] : cases) {
    const auto first = (dir / (tag + "1.csv")).string();
    const auto second = (dir / (tag + "2.csv")).string();
    REQUIRE(run_cli(args + " --out " + first) == 0);
    REQUIRE(run_cli(args + " --out " + second) == 0);
    CHECK(read_file(first) == read_file(second));
    CHECK_FALSE(read_file(first).empty());
  }
}

TEST_CASE("weights output shape") {
  const auto dir = scratch_dir();
  const auto out = (dir / "weights.csv").string();
  REQUIRE(run_cli("weights --gamma 0 --n 4 --p-points 3 --out " + out) == 0);
  auto lines = split_lines(read_file(out));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "p,w,dw,ddw,w_limit");
  CHECK(lines[1] == "0,1,,,1");     // derivative cells stay blank at gamma = 0
  CHECK(lines[3] == "1,1,,,1");

  const auto out2 = (dir / "weights2.csv").string();
  REQUIRE(run_cli("weights --gamma 1 --n 2 --p-points 3 --out " + out2) == 0);
  lines = split_lines(read_file(out2));
  CHECK(lines[2].rfind("0.5,1.5,", 0) == 0);
  CHECK(lines[3].rfind("1,1,", 0) == 0);
}

TEST_CASE("simulate with a single trial reports sentinel spread and no failures") {
  const auto dir = scratch_dir();
  const auto out = (dir / "sim1.csv").string();
  REQUIRE(run_cli("simulate --gammas 1 --n 4 --trials 1 --seed 3 "
                  "--logits 0,0 --correct 1,0 --out " +
                  out) == 0);
  const auto lines = split_lines(read_file(out));
  REQUIRE(lines.size() == 3);
  CHECK(lines[1].find(",inf,") != std::string::npos);
  // Flag cells sit at the end of each row; neither may report a failure.
  CHECK(lines[1].ends_with(",1,1"));   // direct: mean_ok, trace_ok
  CHECK(lines[2].ends_with(",1,"));    // control variate: mean_ok only
}

TEST_CASE("counts written by a campaign replay the library selection exactly") {
  namespace sim = powerlik::simulator;
  namespace sel = powerlik::selection;
  const auto dir = scratch_dir();
  const auto report = (dir / "report.csv").string();
  const auto counts_path = (dir / "counts.csv").string();
  REQUIRE(run_cli("simulate --gammas 1 --n 8 --trials 200 --seed 4242 "
                  "--logits 0.4,-0.3,0.8,0.1,-0.6,0.5,-0.2,0 --correct 1,0,0,1,1,0,0,0 "
                  "--counts-out " +
                  counts_path + " --out " + report) == 0);

  Eigen::VectorXd logits(8);
  logits << 0.4, -0.3, 0.8, 0.1, -0.6, 0.5, -0.2, 0.0;
  sim::SyntheticPolicy policy(logits, {true, false, false, true, true, false, false, false});
  const std::vector<int> expected_counts = sim::campaign_success_counts(policy, 8, 200, 4242);

  const auto lines = split_lines(read_file(counts_path));
  REQUIRE(lines.size() == 201);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string want = std::to_string(i - 1) + "," +
                             std::to_string(expected_counts[i - 1]) + ",8";
    CHECK(lines[i] == want);
  }

  const auto trace = (dir / "trace.csv").string();
  const auto stdout_path = (dir / "select_stdout.txt").string();
  REQUIRE(run_cli("select --counts " + counts_path + " --lambda-var 0.01 --out " + trace,
                  stdout_path) == 0);

  sel::SelectionConfig config;
  config.lambda_var = 0.01;
  config.n_rollouts = 8;
  const auto stats = sel::stats_from_counts(expected_counts, 8, 1.0, 1.0, sel::Metric::pass1());
  const auto result = sel::select_gamma(stats, config);
  const char* chosen = result.chosen_by == sel::ChosenBy::grid
                           ? "grid"
                           : result.chosen_by == sel::ChosenBy::newton ? "newton" : "boundary";
  const std::string expected_line =
      "gamma_star=" + powerlik::format_double(result.gamma_star) + " chosen_by=" + chosen + "\n";
  CHECK(read_file(stdout_path) == expected_line);

  // Re-running select is byte-stable too.
  const auto trace2 = (dir / "trace2.csv").string();
  REQUIRE(run_cli("select --counts " + counts_path + " --lambda-var 0.01 --out " + trace2) == 0);
  CHECK(read_file(trace) == read_file(trace2));
}

TEST_CASE("configuration file supplies defaults and flags override it") {
  const auto dir = scratch_dir();
  const auto config_path = (dir / "run.ini").string();
  cli_util::write_file(config_path, "[table]\ngamma=1\nn=4\n");

  const auto from_config = (dir / "cfg_table.csv").string();
  REQUIRE(run_cli("--config " + config_path + " table --out " + from_config) == 0);
  CHECK(read_file(from_config) == read_file(std::string(GOLDEN_DIR) + "/table_gamma1_n4.csv"));

  const auto overridden = (dir / "cfg_table2.csv").string();
  REQUIRE(run_cli("--config " + config_path + " table --gamma 0 --out " + overridden) == 0);
  // gamma 0 from the flag, n 4 from the file; the gamma-ratio cancels exactly.
  CHECK(read_file(overridden) == "K,beta,alpha\n1,1,0.25\n2,1,0.5\n3,1,0.75\n4,1,1\n");
}

TEST_CASE("exit codes distinguish config, io, and parse failures") {
  const auto dir = scratch_dir();
  const auto err = (dir / "err.txt").string();

  // Missing required flag.
  CHECK(run_cli("table --gamma 1 --n 4", "", err) == 2);

  // Unwritable output path.
  CHECK(run_cli("table --gamma 1 --n 4 --out /nonexistent-dir/x.csv", "", err) == 3);

  // Missing counts file.
  CHECK(run_cli("select --counts " + (dir / "absent.csv").string() +
                    " --lambda-var 0 --out " + (dir / "o.csv").string(),
                "", err) == 3);

  // Malformed counts: K > N, diagnostic names the line.
  const auto bad = (dir / "bad.csv").string();
  cli_util::write_file(bad, "prompt_id,K,N\na,9,4\n");
  CHECK(run_cli("select --counts " + bad + " --lambda-var 0 --out " + (dir / "o.csv").string(),
                "", err) == 2);
  CHECK(read_file(err).find("line 2") != std::string::npos);

  // Mixed N across records.
  const auto mixed = (dir / "mixed.csv").string();
  cli_util::write_file(mixed, "prompt_id,K,N\na,1,4\nb,1,8\n");
  CHECK(run_cli("select --counts " + mixed + " --lambda-var 0 --out " + (dir / "o.csv").string(),
                "", err) == 2);
  CHECK(read_file(err).find("differs") != std::string::npos);

  // Invalid policy spec.
  CHECK(run_cli("simulate --gammas 1 --n 2 --trials 10 --logits 0,0 --correct 1 --out " +
                    (dir / "s.csv").string(),
                "", err) == 2);
}
