// mpglab: validate games, run the learning dynamics, integrate the
// best-response flow, certify equilibria, and drive the acceptance suite.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpglab/acceptance.hpp"
#include "mpglab/experiment.hpp"
#include "mpglab/io.hpp"

namespace {

// MPG_LAB_OUT always wins over --out so batch drivers can redirect output
// without touching the command line.
std::string resolve_out(const std::string& flag_value) {
  if (const char* env = std::getenv("MPG_LAB_OUT"); env && *env)
    return env;
  return flag_value;
}

int cmd_validate(const std::string& game) {
  const mpg::PotentialGame pg = mpg::load_game(game);
  const mpg::GameReport rep = mpg::validate_game(pg.game);
  std::cout << "game: " << game << '\n'
            << "players: " << pg.game.num_players
            << ", states: " << pg.game.num_states << ", joint actions: "
            << pg.game.num_joint_actions() << '\n'
            << "max |payoff|: " << mpg::format_double(rep.max_payoff) << '\n'
            << "irreducibility witness: joint action "
            << rep.witness_action << '\n';
  switch (pg.kind) {
    case mpg::PotentialKind::none:
      std::cout << "potential: none declared\n";
      break;
    case mpg::PotentialKind::team:
      std::cout << "potential: team (identical payoffs)\n";
      break;
    case mpg::PotentialKind::single_state:
      std::cout << "potential: single-state closed form\n";
      break;
  }
  if (pg.kind != mpg::PotentialKind::none) {
    const mpg::MpgReport mr = mpg::verify_mpg(pg);
    std::cout << "potential property: "
              << (mr.passed ? "holds" : "VIOLATED") << " (max violation "
              << mpg::format_double(mr.max_violation) << " over "
              << mr.samples << " sampled deviations)\n";
    if (!mr.passed) return 2;
  }
  std::cout << "valid\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& game,
            const std::vector<std::uint64_t>& seeds, const std::string& out,
            int jobs, std::int64_t cadence, std::int64_t iterations) {
  mpg::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = mpg::load_experiment_config(config_path);
  if (!game.empty()) cfg.game = game;
  if (!seeds.empty()) cfg.seeds = seeds;
  if (!out.empty()) cfg.output_dir = out;
  cfg.output_dir = resolve_out(cfg.output_dir);
  if (jobs >= 0) cfg.jobs = jobs;
  if (cadence > 0) cfg.metrics_cadence = cadence;
  if (iterations > 0) cfg.iterations = iterations;

  const mpg::ExperimentResult res = mpg::run_experiment(cfg, &std::cout);
  std::cout << "pass fraction: " << mpg::format_double(res.pass_fraction)
            << (res.passed ? " (>= threshold)" : " (below threshold)")
            << '\n'
            << "summary: " << res.summary_path << '\n';
  return res.passed ? 0 : 3;
}

int cmd_flow(const std::string& game, double dt, double horizon,
             const std::string& init, const std::string& policy_path,
             std::string out) {
  const mpg::PotentialGame pg = mpg::load_game(game);
  mpg::validate_game(pg.game);
  mpg::PolicyProfile pi0 = mpg::PolicyProfile::uniform(pg.game);
  if (init == "file") {
    if (policy_path.empty())
      throw mpg::ConfigError("--init file requires --policy");
    pi0 = mpg::load_policy(pg.game, policy_path);
  }
  mpg::FlowConfig fc;
  fc.dt = dt;
  fc.horizon = horizon;
  const mpg::FlowTrajectory traj = mpg::integrate_flow(pg, pi0, fc);

  if (const char* env = std::getenv("MPG_LAB_OUT"); env && *env)
    out = (std::filesystem::path(env) /
           std::filesystem::path(out).filename())
              .string();
  {
    const auto parent = std::filesystem::path(out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream f(out);
    if (!f) throw mpg::ConfigError("cannot write " + out);
    mpg::write_flow_csv(f, traj, pg.game);
  }
  const auto rep = mpg::lyapunov_monotonicity_report(traj, 1e-6 * fc.dt);
  const auto& last = traj.points.back();
  std::cout << "steps: " << rep.steps << ", potential-gap rises off switches: "
            << rep.violations << '\n'
            << "final phi: " << mpg::format_double(last.phi)
            << ", final nash_gap: " << mpg::format_double(last.nash_gap)
            << '\n'
            << "trajectory: " << out << '\n';
  return rep.passed ? 0 : 2;
}

int cmd_certify(const std::string& game, const std::string& policy_path,
                double epsilon) {
  const mpg::PotentialGame pg = mpg::load_game(game);
  mpg::validate_game(pg.game);
  const mpg::PolicyProfile pi = mpg::load_policy(pg.game, policy_path);
  const mpg::NashReport rep = mpg::nash_gap(pg.game, pi, epsilon);
  for (int i = 0; i < pg.game.num_players; ++i)
    for (int s = 0; s < pg.game.num_states; ++s)
      std::cout << "player " << i << " state " << s << " gap "
                << mpg::format_double(rep.gap[i][s]) << '\n';
  std::cout << "max gap: " << mpg::format_double(rep.max_gap) << '\n'
            << (rep.certified ? "certified equilibrium at epsilon = "
                              : "NOT an equilibrium at epsilon = ")
            << epsilon << '\n';
  const auto fp = mpg::br_fixed_point_check(pg.game, pi, epsilon);
  std::cout << "best-response fixed point: "
            << (fp.passed ? "yes" : "no") << '\n';
  return rep.certified ? 0 : 2;
}

int cmd_accept(const std::string& out, int jobs) {
  mpg::AcceptanceOptions opt;
  opt.out_dir = resolve_out(out);
  opt.jobs = jobs;
  const mpg::AcceptanceReport rep = mpg::run_acceptance_suite(std::cout, opt);
  return rep.all_passed() ? 0 : 1;
}

int cmd_catalog(const std::string& dump) {
  if (!dump.empty()) {
    std::cout << mpg::game_to_json(mpg::builtin_game(dump)).dump(2) << '\n';
    return 0;
  }
  for (const auto& name : mpg::builtin_names()) {
    const mpg::PotentialGame pg = mpg::builtin_game(name);
    std::cout << name << ": " << pg.game.num_players << " players, "
              << pg.game.num_states << " states, discount "
              << mpg::format_double(pg.game.discount) << ", "
              << (pg.kind == mpg::PotentialKind::team
                      ? "team potential"
                      : pg.kind == mpg::PotentialKind::single_state
                            ? "single-state potential"
                            : "no potential (counterexample)")
              << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Decentralized learning laboratory for Markov potential games.\n"
      "Metrics CSV schema (fixed): " +
      std::string(mpg::kMetricsCsvHeader)};
  app.require_subcommand(1);

  std::string game, config_path, policy_path, out, init = "uniform", dump;
  std::vector<std::uint64_t> seeds;
  int jobs = -1;
  std::int64_t cadence = 0, iterations = 0;
  double dt = 0.01, horizon = 50.0, epsilon = 1e-6;

  auto* validate = app.add_subcommand(
      "validate", "Check a game file or built-in for well-formedness");
  validate->add_option("game", game, "built-in name (G1..G4, GZ) or path")
      ->required();

  auto* run = app.add_subcommand(
      "run", "Run the learning dynamics over a seed batch");
  run->add_option("--config", config_path, "run config JSON");
  run->add_option("--game", game, "built-in name or path (overrides config)");
  run->add_option("--seeds", seeds, "seed list (overrides config)")
      ->delimiter(',');
  run->add_option("--out", out, "output directory");
  run->add_option("--jobs", jobs, "worker count (default: logical cores)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--cadence", cadence, "metrics cadence in iterates")
      ->check(CLI::PositiveNumber);
  run->add_option("--iterations", iterations, "iterates per seed")
      ->check(CLI::PositiveNumber);

  auto* flow = app.add_subcommand(
      "flow", "Integrate the best-response flow and emit its trajectory");
  flow->add_option("game", game, "built-in name or path")->required();
  flow->add_option("--dt", dt, "Euler step");
  flow->add_option("--horizon", horizon, "integration horizon");
  flow->add_option("--init", init, "uniform|file")
      ->check(CLI::IsMember({"uniform", "file"}));
  flow->add_option("--policy", policy_path, "policy JSON for --init file");
  flow->add_option("--out", out, "trajectory CSV path");

  auto* certify = app.add_subcommand(
      "certify", "Certify a policy profile as an epsilon-equilibrium");
  certify->add_option("game", game, "built-in name or path")->required();
  certify->add_option("policy", policy_path, "policy JSON")->required();
  certify->add_option("--epsilon", epsilon, "certification tolerance");

  auto* accept = app.add_subcommand(
      "accept", "Run the full acceptance suite");
  accept->add_option("--out", out, "directory for learning-run CSVs");
  accept->add_option("--jobs", jobs, "worker count for seed batches");

  auto* catalog = app.add_subcommand(
      "catalog", "List built-in games (or dump one as JSON)");
  catalog->add_option("--dump", dump, "print this built-in as a game file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(game);
    if (run->parsed())
      return cmd_run(config_path, game, seeds, out, jobs, cadence,
                     iterations);
    if (flow->parsed())
      return cmd_flow(game, dt, horizon, init, policy_path,
                      out.empty() ? "flow.csv" : out);
    if (certify->parsed()) return cmd_certify(game, policy_path, epsilon);
    if (accept->parsed())
      return cmd_accept(out.empty() ? "accept_out" : out, jobs);
    if (catalog->parsed()) return cmd_catalog(dump);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
