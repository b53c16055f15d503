#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "mpglab/io.hpp"
#include "mpglab/learner.hpp"
#include "mpglab/potential.hpp"

namespace mpg {

struct SeedOutcome {
  std::uint64_t seed = 0;
  MetricsRow final_row;
  bool pass_nash_gap = false;
  bool pass_q_tracking = false;
  bool pass = false;
  std::string csv_path;
};

struct ExperimentResult {
  std::vector<SeedOutcome> outcomes;  // ordered as cfg.seeds
  double pass_fraction = 0.0;
  bool passed = false;
  std::string summary_path;
};

namespace detail {

// Size-1 parameter lists apply to every player.
template <typename T>
std::vector<T> per_player(std::vector<T> v, int num_players,
                          const char* what) {
  if (v.size() == 1) return std::vector<T>(num_players, v[0]);
  if (static_cast<int>(v.size()) != num_players)
    throw ConfigError(std::string("run config: '") + what +
                      "' needs one entry (shared) or one per player");
  return v;
}

}  // namespace detail

inline DynamicsSetup make_setup(const ExperimentConfig& cfg,
                                int num_players) {
  DynamicsSetup setup;
  setup.theta = detail::per_player(cfg.theta, num_players, "theta");
  setup.schedules =
      detail::per_player(cfg.schedules, num_players, "schedule");
  validate_schedules(setup.schedules);
  setup.q_init = cfg.q_init;
  setup.br_uses_stale_q = cfg.br_uses_stale_q;
  setup.iterations = cfg.iterations;
  setup.metrics_cadence = cfg.metrics_cadence;
  return setup;
}

// Runs every seed (worker pool over a shared index), writes one metrics CSV
// per seed plus summary.json into cfg.output_dir, and evaluates the
// convergence thresholds on each seed's final row.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       std::ostream* log = nullptr) {
  validate_experiment_config(cfg);
  const PotentialGame pg = load_game(cfg.game);
  validate_game(pg.game);
  if (pg.kind == PotentialKind::none)
    throw ConfigError("run config: game has no potential declared");
  const DynamicsSetup setup = make_setup(cfg, pg.game.num_players);

  std::filesystem::create_directories(cfg.output_dir);

  const int seed_count = static_cast<int>(cfg.seeds.size());
  int jobs = cfg.jobs > 0
                 ? cfg.jobs
                 : static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  if (jobs > seed_count) jobs = seed_count;

  std::vector<SeedOutcome> outcomes(seed_count);
  std::atomic<int> next{0};
  std::mutex log_mutex;
  std::vector<std::string> failures(seed_count);

  const auto worker = [&]() {
    for (int k = next.fetch_add(1); k < seed_count; k = next.fetch_add(1)) {
      const std::uint64_t seed = cfg.seeds[k];
      try {
        const RunMetrics metrics = run_dynamics(pg, setup, seed);
        SeedOutcome& o = outcomes[k];
        o.seed = seed;
        o.final_row = metrics.rows.back();
        o.pass_nash_gap = o.final_row.nash_gap <= cfg.nash_gap_final;
        o.pass_q_tracking =
            o.final_row.q_tracking_error <= cfg.q_tracking_final;
        o.pass = o.pass_nash_gap && o.pass_q_tracking;
        const auto path = std::filesystem::path(cfg.output_dir) /
                          ("seed_" + std::to_string(seed) + ".csv");
        o.csv_path = path.string();
        std::ofstream out(path);
        if (!out) throw ConfigError("cannot write " + path.string());
        write_metrics_csv(out, metrics);
        if (log) {
          std::lock_guard<std::mutex> lock(log_mutex);
          *log << "seed " << seed << ": nash_gap "
               << format_double(o.final_row.nash_gap) << ", q_tracking "
               << format_double(o.final_row.q_tracking_error)
               << (o.pass ? " [pass]" : " [fail]") << '\n';
        }
      } catch (const std::exception& e) {
        failures[k] = e.what();
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (int k = 0; k < seed_count; ++k)
    if (!failures[k].empty())
      throw Error("seed " + std::to_string(cfg.seeds[k]) +
                  " failed: " + failures[k]);

  ExperimentResult result;
  result.outcomes = std::move(outcomes);
  int passed = 0;
  for (const auto& o : result.outcomes) passed += o.pass ? 1 : 0;
  result.pass_fraction = static_cast<double>(passed) / seed_count;
  result.passed = result.pass_fraction >= cfg.pass_fraction;

  json summary;
  summary["config"] = experiment_config_to_json(cfg);
  json rows = json::array();
  for (const auto& o : result.outcomes)
    rows.push_back({{"seed", o.seed},
                    {"final",
                     {{"iterate", o.final_row.iterate},
                      {"nash_gap", o.final_row.nash_gap},
                      {"q_tracking_error", o.final_row.q_tracking_error},
                      {"potential_value", o.final_row.potential_value},
                      {"min_state_visits", o.final_row.min_state_visits}}},
                    {"pass_nash_gap", o.pass_nash_gap},
                    {"pass_q_tracking", o.pass_q_tracking},
                    {"pass", o.pass},
                    {"csv", o.csv_path}});
  summary["results"] = std::move(rows);
  summary["pass_fraction"] = result.pass_fraction;
  summary["passed"] = result.passed;
  const auto spath =
      std::filesystem::path(cfg.output_dir) / "summary.json";
  result.summary_path = spath.string();
  std::ofstream out(spath);
  if (!out) throw ConfigError("cannot write " + spath.string());
  out << summary.dump(2) << '\n';
  return result;
}

}  // namespace mpg
