#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpglab/catalog.hpp"
#include "mpglab/flow.hpp"
#include "mpglab/game.hpp"
#include "mpglab/learner.hpp"
#include "mpglab/potential.hpp"

namespace mpg {

using json = nlohmann::json;

// Shortest decimal form that parses back to the identical double, so every
// emitted file round-trips bit-exactly (and any literal of <= 15
// significant digits survives load -> save unchanged).
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline const json& require(const json& j, const char* key,
                           const char* where) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string(where) + ": missing field '" + key + "'");
  return *it;
}

template <typename T>
T field_as(const json& j, const char* key, const char* where) {
  try {
    return require(j, key, where).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + ": field '" + key +
                      "': " + e.what());
  }
}

template <typename T>
T field_or(const json& j, const char* key, const char* where, T fallback) {
  if (!j.contains(key)) return fallback;
  return field_as<T>(j, key, where);
}

inline json parse_document(std::istream& in, const char* where) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Game files. Layout:
//   num_players, discount, states (names), actions (names per player),
//   mu (array), payoff[player][state][joint action],
//   transition[state][joint action][next state],
//   optional potential: {"kind": "team"} or
//     {"kind": "single_state_potential", "phi": [...], "zeta": [[...], ...]}.
// Joint action index: sum_i a_i * prod_{k > i} |A_k| (last player fastest).

inline json game_to_json(const PotentialGame& pg) {
  const Game& g = pg.game;
  json j;
  j["num_players"] = g.num_players;
  j["discount"] = g.discount;
  j["states"] = g.state_names;
  j["actions"] = g.action_names;
  j["mu"] = g.mu;
  const std::int64_t J = g.num_joint_actions();
  json payoff = json::array();
  for (int i = 0; i < g.num_players; ++i) {
    json per_state = json::array();
    for (int s = 0; s < g.num_states; ++s) {
      json row = json::array();
      for (std::int64_t a = 0; a < J; ++a) row.push_back(g.u(i, s, a));
      per_state.push_back(std::move(row));
    }
    payoff.push_back(std::move(per_state));
  }
  j["payoff"] = std::move(payoff);
  json transition = json::array();
  for (int s = 0; s < g.num_states; ++s) {
    json per_joint = json::array();
    for (std::int64_t a = 0; a < J; ++a) {
      json row = json::array();
      for (int s2 = 0; s2 < g.num_states; ++s2) row.push_back(g.p(s, a, s2));
      per_joint.push_back(std::move(row));
    }
    transition.push_back(std::move(per_joint));
  }
  j["transition"] = std::move(transition);
  if (pg.kind == PotentialKind::team) {
    j["potential"] = {{"kind", "team"}};
  } else if (pg.kind == PotentialKind::single_state) {
    j["potential"] = {{"kind", "single_state_potential"},
                      {"phi", pg.phi},
                      {"zeta", pg.zeta}};
  }
  return j;
}

inline PotentialGame game_from_json(const json& j) {
  const char* where = "game file";
  Game g;
  g.num_players = detail::field_as<int>(j, "num_players", where);
  g.discount = detail::field_as<double>(j, "discount", where);
  g.state_names =
      detail::field_as<std::vector<std::string>>(j, "states", where);
  g.action_names = detail::field_as<std::vector<std::vector<std::string>>>(
      j, "actions", where);
  g.mu = detail::field_as<std::vector<double>>(j, "mu", where);
  g.num_states = static_cast<int>(g.state_names.size());
  if (static_cast<int>(g.action_names.size()) != g.num_players)
    throw ConfigError("game file: 'actions' needs one list per player");
  for (const auto& names : g.action_names)
    g.num_actions.push_back(static_cast<int>(names.size()));

  const std::int64_t J = g.num_joint_actions();
  const auto& payoff = detail::require(j, "payoff", where);
  if (static_cast<int>(payoff.size()) != g.num_players)
    throw ConfigError("game file: 'payoff' needs one table per player");
  try {
    for (const auto& per_state : payoff) {
      if (static_cast<int>(per_state.size()) != g.num_states)
        throw ConfigError("game file: 'payoff' needs one row per state");
      std::vector<double> table;
      table.reserve(static_cast<std::size_t>(g.num_states) * J);
      for (const auto& row : per_state) {
        if (static_cast<std::int64_t>(row.size()) != J)
          throw ConfigError(
              "game file: 'payoff' rows need one entry per joint action");
        for (const auto& v : row) table.push_back(v.get<double>());
      }
      g.payoff.push_back(std::move(table));
    }
    const auto& transition = detail::require(j, "transition", where);
    if (static_cast<int>(transition.size()) != g.num_states)
      throw ConfigError("game file: 'transition' needs one block per state");
    for (const auto& per_joint : transition) {
      if (static_cast<std::int64_t>(per_joint.size()) != J)
        throw ConfigError(
            "game file: 'transition' needs one row per joint action");
      for (const auto& row : per_joint) {
        if (static_cast<int>(row.size()) != g.num_states)
          throw ConfigError(
              "game file: 'transition' rows need one entry per state");
        for (const auto& v : row) g.transition.push_back(v.get<double>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("game file: ") + e.what());
  }

  PotentialGame pg;
  pg.game = std::move(g);
  if (j.contains("potential")) {
    const auto& pot = j["potential"];
    const auto kind = detail::field_as<std::string>(pot, "kind", where);
    if (kind == "team") {
      pg.kind = PotentialKind::team;
      for (int i = 1; i < pg.game.num_players; ++i)
        if (pg.game.payoff[i] != pg.game.payoff[0])
          throw PayoffMismatch(
              "game file: team potential but payoff tables differ");
    } else if (kind == "single_state_potential") {
      pg.kind = PotentialKind::single_state;
      pg.phi = detail::field_as<std::vector<double>>(pot, "phi", where);
      pg.zeta = detail::field_as<std::vector<std::vector<double>>>(
          pot, "zeta", where);
      if (pg.game.num_states != 1)
        throw ConfigError(
            "game file: single-state potential on a multi-state game");
      if (static_cast<std::int64_t>(pg.phi.size()) != J)
        throw ConfigError("game file: 'phi' needs one entry per joint action");
    } else {
      throw ConfigError("game file: unknown potential kind '" + kind + "'");
    }
  }
  return pg;
}

inline void save_game(const PotentialGame& pg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write game file: " + path);
  out << game_to_json(pg).dump(2) << '\n';
}

// Accepts a built-in name (G1..G4, GZ) or a path to a game file.
inline PotentialGame load_game(const std::string& name_or_path) {
  if (is_builtin(name_or_path)) return builtin_game(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("cannot open game file: " + name_or_path);
  return game_from_json(detail::parse_document(in, "game file"));
}

// ---------------------------------------------------------------------------
// Policy files: {"policy": [player][state][action]}.

inline json policy_to_json(const PolicyProfile& pi) {
  json rows = json::array();
  for (int i = 0; i < pi.num_players(); ++i) {
    json per_state = json::array();
    for (int s = 0; s < pi.num_states(); ++s) {
      json row = json::array();
      for (int a = 0; a < pi.num_actions(i); ++a)
        row.push_back(pi.at(i, s, a));
      per_state.push_back(std::move(row));
    }
    rows.push_back(std::move(per_state));
  }
  return {{"policy", std::move(rows)}};
}

inline PolicyProfile policy_from_json(const Game& g, const json& j) {
  const auto rows = detail::field_as<
      std::vector<std::vector<std::vector<double>>>>(j, "policy",
                                                     "policy file");
  PolicyProfile pi(g.num_states, g.num_actions);
  if (static_cast<int>(rows.size()) != g.num_players)
    throw ConfigError("policy file: one block per player required");
  for (int i = 0; i < g.num_players; ++i) {
    if (static_cast<int>(rows[i].size()) != g.num_states)
      throw ConfigError("policy file: one row per state required");
    for (int s = 0; s < g.num_states; ++s) {
      if (static_cast<int>(rows[i][s].size()) != g.num_actions[i])
        throw ConfigError("policy file: row length must match action count");
      pi.set_row(i, s, rows[i][s]);
    }
  }
  validate_policy(g, pi);
  return pi;
}

inline PolicyProfile load_policy(const Game& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open policy file: " + path);
  return policy_from_json(g, detail::parse_document(in, "policy file"));
}

// ---------------------------------------------------------------------------
// Experiment configuration.

struct ExperimentConfig {
  std::string game = "G2";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::int64_t iterations = 2'000'000;
  std::int64_t metrics_cadence = 10'000;
  // Size 1 applies to every player; otherwise one entry per player.
  std::vector<double> theta = {0.05};
  std::vector<StepSchedule> schedules = {StepSchedule{}};
  double q_init = 0.0;
  bool br_uses_stale_q = false;
  std::string output_dir = "out";
  double nash_gap_final = 0.05;
  double q_tracking_final = 0.1;
  double pass_fraction = 0.9;
  int jobs = 0;  // 0 selects the hardware concurrency
};

// Value invariants shared by the JSON parser and run_experiment, so configs
// assembled programmatically (e.g. from CLI overrides) hit the same checks.
inline void validate_experiment_config(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("run config: 'seeds' is empty");
  for (std::size_t a = 0; a < cfg.seeds.size(); ++a)
    for (std::size_t b = a + 1; b < cfg.seeds.size(); ++b)
      if (cfg.seeds[a] == cfg.seeds[b])
        throw ConfigError("run config: 'seeds' must be distinct");
  if (cfg.iterations < 1 || cfg.metrics_cadence < 1)
    throw ConfigError(
        "run config: 'iterations' and 'metrics_cadence' must be positive");
  if (cfg.nash_gap_final <= 0.0 || cfg.q_tracking_final <= 0.0 ||
      cfg.pass_fraction <= 0.0 || cfg.pass_fraction > 1.0)
    throw ConfigError("run config: thresholds out of range");
  if (cfg.jobs < 0) throw ConfigError("run config: 'jobs' must be >= 0");
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  const char* where = "run config";
  ExperimentConfig cfg;
  cfg.game = detail::field_or<std::string>(j, "game", where, cfg.game);
  cfg.seeds = detail::field_or<std::vector<std::uint64_t>>(j, "seeds", where,
                                                           cfg.seeds);
  cfg.iterations =
      detail::field_or<std::int64_t>(j, "iterations", where, cfg.iterations);
  cfg.metrics_cadence = detail::field_or<std::int64_t>(
      j, "metrics_cadence", where, cfg.metrics_cadence);

  if (j.contains("players")) {
    const auto& players = j["players"];
    const auto parse_player = [&](const json& p) {
      StepSchedule s;
      s.z = detail::field_or<double>(p, "z", where, s.z);
      s.c1 = detail::field_or<double>(p, "c1", where, s.c1);
      s.y = detail::field_or<double>(p, "y", where, s.y);
      s.c2 = detail::field_or<double>(p, "c2", where, s.c2);
      const double theta =
          detail::field_or<double>(p, "theta", where, 0.05);
      return std::pair<double, StepSchedule>(theta, s);
    };
    cfg.theta.clear();
    cfg.schedules.clear();
    if (players.is_array()) {
      for (const auto& p : players) {
        const auto [theta, sched] = parse_player(p);
        cfg.theta.push_back(theta);
        cfg.schedules.push_back(sched);
      }
      if (cfg.theta.empty())
        throw ConfigError("run config: 'players' array is empty");
    } else if (players.is_object()) {
      const auto [theta, sched] = parse_player(players);
      cfg.theta.push_back(theta);
      cfg.schedules.push_back(sched);
    } else {
      throw ConfigError("run config: 'players' must be object or array");
    }
  }

  cfg.q_init = detail::field_or<double>(j, "q_init", where, cfg.q_init);
  cfg.br_uses_stale_q = detail::field_or<bool>(j, "br_uses_stale_q", where,
                                               cfg.br_uses_stale_q);
  cfg.output_dir =
      detail::field_or<std::string>(j, "output_dir", where, cfg.output_dir);
  if (j.contains("thresholds")) {
    const auto& th = j["thresholds"];
    cfg.nash_gap_final = detail::field_or<double>(th, "nash_gap_final",
                                                  where, cfg.nash_gap_final);
    cfg.q_tracking_final = detail::field_or<double>(
        th, "q_tracking_final", where, cfg.q_tracking_final);
    cfg.pass_fraction = detail::field_or<double>(th, "pass_fraction", where,
                                                 cfg.pass_fraction);
  }
  cfg.jobs = detail::field_or<int>(j, "jobs", where, cfg.jobs);
  validate_experiment_config(cfg);
  return cfg;
}

inline json experiment_config_to_json(const ExperimentConfig& cfg) {
  json players = json::array();
  for (std::size_t i = 0; i < cfg.theta.size(); ++i)
    players.push_back({{"theta", cfg.theta[i]},
                       {"z", cfg.schedules[i].z},
                       {"c1", cfg.schedules[i].c1},
                       {"y", cfg.schedules[i].y},
                       {"c2", cfg.schedules[i].c2}});
  return {{"game", cfg.game},
          {"seeds", cfg.seeds},
          {"iterations", cfg.iterations},
          {"metrics_cadence", cfg.metrics_cadence},
          {"players", std::move(players)},
          {"q_init", cfg.q_init},
          {"br_uses_stale_q", cfg.br_uses_stale_q},
          {"output_dir", cfg.output_dir},
          {"thresholds",
           {{"nash_gap_final", cfg.nash_gap_final},
            {"q_tracking_final", cfg.q_tracking_final},
            {"pass_fraction", cfg.pass_fraction}}},
          {"jobs", cfg.jobs}};
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config: " + path);
  return experiment_config_from_json(
      detail::parse_document(in, "run config"));
}

// ---------------------------------------------------------------------------
// Metrics CSV. Fixed header; shortest round-trip number formatting, so
// identical runs produce byte-identical files.

inline constexpr const char* kMetricsCsvHeader =
    "iterate,nash_gap,q_tracking_error,potential_value,min_state_visits";

inline void write_metrics_csv(std::ostream& out, const RunMetrics& metrics) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& row : metrics.rows)
    out << row.iterate << ',' << format_double(row.nash_gap) << ','
        << format_double(row.q_tracking_error) << ','
        << format_double(row.potential_value) << ',' << row.min_state_visits
        << '\n';
}

// Flow CSV: tau, phi, nash_gap, br_switch, then one column per policy entry.
inline void write_flow_csv(std::ostream& out, const FlowTrajectory& traj,
                           const Game& g) {
  out << "tau,phi,nash_gap,br_switch";
  for (int i = 0; i < g.num_players; ++i)
    for (int s = 0; s < g.num_states; ++s)
      for (int a = 0; a < g.num_actions[i]; ++a)
        out << ",pi" << i << "_s" << s << "_a" << a;
  out << '\n';
  for (const auto& p : traj.points) {
    out << format_double(p.tau) << ',' << format_double(p.phi) << ','
        << format_double(p.nash_gap) << ',' << (p.br_switch ? 1 : 0);
    for (int i = 0; i < g.num_players; ++i)
      for (int s = 0; s < g.num_states; ++s)
        for (int a = 0; a < g.num_actions[i]; ++a)
          out << ',' << format_double(p.policy.at(i, s, a));
    out << '\n';
  }
}

}  // namespace mpg
