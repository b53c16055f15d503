#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mpglab/errors.hpp"
#include "mpglab/game.hpp"
#include "mpglab/potential.hpp"
#include "mpglab/rng.hpp"

namespace mpg {

namespace detail {

inline std::vector<std::string> default_names(std::string_view prefix,
                                              int count) {
  std::vector<std::string> names;
  names.reserve(count);
  for (int k = 0; k < count; ++k)
    names.push_back(std::string(prefix) + std::to_string(k));
  return names;
}

inline void fill_names(Game& g) {
  g.state_names = default_names("s", g.num_states);
  g.action_names.clear();
  for (int a : g.num_actions)
    g.action_names.push_back(default_names("a", a));
}

}  // namespace detail

// Random transition row with every entry >= floor: a normalized uniform
// draw mixed toward the uniform distribution by weight floor * S.
inline std::vector<double> random_transition_row(Rng& rng, int num_states,
                                                 double floor) {
  std::vector<double> row(num_states);
  double sum = 0.0;
  for (double& v : row) {
    v = rng.uniform();
    sum += v;
  }
  const double lambda = floor * num_states;
  for (double& v : row)
    v = (1.0 - lambda) * (sum > 0.0 ? v / sum : 1.0 / num_states) +
        lambda / num_states;
  return row;
}

// General-sum random game: payoffs uniform on [0, 1), transition rows with
// the given probability floor, uniform initial distribution. Draw order:
// payoffs player-major then state-major then joint-action-major, followed
// by transition rows state-major then joint-action-major.
inline Game random_game(Rng& rng, int num_states, std::vector<int> actions,
                        double discount, double floor = 0.05) {
  Game g;
  g.num_players = static_cast<int>(actions.size());
  g.num_states = num_states;
  g.num_actions = std::move(actions);
  g.discount = discount;
  g.mu.assign(num_states, 1.0 / num_states);
  detail::fill_names(g);
  const std::int64_t J = g.num_joint_actions();
  g.payoff.assign(g.num_players, {});
  for (auto& table : g.payoff) {
    table.resize(static_cast<std::size_t>(num_states) * J);
    for (double& v : table) v = rng.uniform();
  }
  g.transition.reserve(static_cast<std::size_t>(num_states) * J *
                       num_states);
  for (int s = 0; s < num_states; ++s)
    for (std::int64_t j = 0; j < J; ++j) {
      const auto row = random_transition_row(rng, num_states, floor);
      g.transition.insert(g.transition.end(), row.begin(), row.end());
    }
  return g;
}

// Team variant: one common payoff table drawn and shared by all players.
inline PotentialGame random_team_game(Rng& rng, int num_states,
                                      std::vector<int> actions,
                                      double discount, double floor = 0.05) {
  Game g = random_game(rng, num_states, std::move(actions), discount, floor);
  for (int i = 1; i < g.num_players; ++i) g.payoff[i] = g.payoff[0];
  return make_team_game(std::move(g));
}

// G1: one state, one player, one action, payoff 1. The smallest valid
// game; its value is 1 / (1 - delta) = 2.
inline PotentialGame g1() {
  Game g;
  g.num_players = 1;
  g.num_states = 1;
  g.num_actions = {1};
  g.discount = 0.5;
  g.mu = {1.0};
  detail::fill_names(g);
  g.payoff = {{1.0}};
  g.transition = {1.0};
  return make_team_game(std::move(g));
}

// G2: one state, two players, common payoff [[1, 0], [0, 2]], delta = 0.5.
// A coordination game with pure equilibria (a0, a0) and (a1, a1) worth 2
// and 4, plus a mixed equilibrium at (2/3, 1/3) each.
inline PotentialGame g2() {
  Game g;
  g.num_players = 2;
  g.num_states = 1;
  g.num_actions = {2, 2};
  g.discount = 0.5;
  g.mu = {1.0};
  detail::fill_names(g);
  g.payoff = {{1.0, 0.0, 0.0, 2.0}, {1.0, 0.0, 0.0, 2.0}};
  g.transition = {1.0, 1.0, 1.0, 1.0};
  return make_team_game(std::move(g));
}

// Generation seed for G3, fixed once so the named game never changes.
// Chosen so the instance has a unique deterministic equilibrium, the
// best-reply flow from uniform reaches the potential maximum, and the
// exploration-mixture bias on the q fixed point stays well inside the
// tracking tolerance (~0.028 at theta = 0.05).
inline constexpr std::uint64_t kTeamGameSeed = 15;

// G3 family: two states, two players, two actions each, common payoffs
// uniform on [0, 1), transition entries >= 0.05, delta = 0.8, uniform mu.
inline PotentialGame team_2x2x2(std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 42);
  return random_team_game(rng, 2, {2, 2}, 0.8, 0.05);
}

inline PotentialGame g3() { return team_2x2x2(kTeamGameSeed); }

// G4: single-state potential game with phi = [[1, 0], [0, 2]] and
// interaction-free bonuses zeta_0(b) = (5, -1), zeta_1(a) = (0, 3),
// delta = 0.5. Pure equilibria (a0, a0) and (a1, a1); only the latter
// maximizes the potential.
inline PotentialGame g4() {
  return make_single_state_potential({2, 2}, {1.0, 0.0, 0.0, 2.0},
                                     {{5.0, -1.0}, {0.0, 3.0}}, 0.5);
}

// GZ: matching pennies (zero-sum, nonconstant) embedded in one state, with
// player 0's payoff deliberately claimed as the potential. No potential
// exists for this game, so verification must reject the claim.
inline PotentialGame gz() {
  Game g;
  g.num_players = 2;
  g.num_states = 1;
  g.num_actions = {2, 2};
  g.discount = 0.5;
  g.mu = {1.0};
  detail::fill_names(g);
  g.payoff = {{1.0, -1.0, -1.0, 1.0}, {-1.0, 1.0, 1.0, -1.0}};
  g.transition = {1.0, 1.0, 1.0, 1.0};
  PotentialGame pg;
  pg.kind = PotentialKind::single_state;
  pg.game = std::move(g);
  pg.phi = {1.0, -1.0, -1.0, 1.0};
  pg.zeta = {{0.0, 0.0}, {0.0, 0.0}};
  return pg;
}

inline std::vector<std::string> builtin_names() {
  return {"G1", "G2", "G3", "G4", "GZ"};
}

inline bool is_builtin(std::string_view name) {
  for (const auto& n : builtin_names())
    if (n == name) return true;
  return false;
}

inline PotentialGame builtin_game(std::string_view name) {
  if (name == "G1") return g1();
  if (name == "G2") return g2();
  if (name == "G3") return g3();
  if (name == "G4") return g4();
  if (name == "GZ") return gz();
  throw ConfigError("unknown built-in game: " + std::string(name));
}

}  // namespace mpg
