#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpglab/evaluate.hpp"
#include "mpglab/game.hpp"
#include "mpglab/rng.hpp"

namespace mpg {

enum class PotentialKind {
  none,          // plain game, no potential structure attached
  team,          // identical payoffs; Phi(s, pi) = V_common(s, pi)
  single_state,  // u_i(a) = phi(a) + zeta_i(a_{-i}) on one self-looping state
};

// A game together with its (claimed) potential structure. Constructors
// build structures that satisfy the potential identity by construction;
// verify_mpg checks an arbitrary claim by sampling unilateral deviations.
struct PotentialGame {
  PotentialKind kind = PotentialKind::none;
  Game game;
  // single_state only:
  std::vector<double> phi;                 // [joint action]
  std::vector<std::vector<double>> zeta;   // [player][opponent joint index]
};

// Opponent joint index for player i: the player-last flattening of the
// actions of everyone except i.
inline std::int64_t opponent_index(const Game& g, int player,
                                   std::span<const int> actions) {
  std::int64_t j = 0;
  for (int k = 0; k < g.num_players; ++k) {
    if (k == player) continue;
    j = j * g.num_actions[k] + actions[k];
  }
  return j;
}

// Wraps a game whose players share one payoff table. The shared value
// function is itself the potential.
inline PotentialGame make_team_game(Game g) {
  for (int i = 1; i < g.num_players; ++i)
    if (g.payoff[i] != g.payoff[0])
      throw PayoffMismatch("team game: payoff tables differ across players");
  PotentialGame pg;
  pg.kind = PotentialKind::team;
  pg.game = std::move(g);
  return pg;
}

// Single-state game with u_i(a) = phi(a) + zeta_i(a_{-i}) and a self loop.
// Unilateral deviations leave the zeta term untouched, so phi / (1 - delta)
// is an exact potential. zeta may be empty (all zero).
inline PotentialGame make_single_state_potential(
    std::vector<int> num_actions, std::vector<double> phi,
    std::vector<std::vector<double>> zeta, double discount) {
  Game g;
  g.num_players = static_cast<int>(num_actions.size());
  g.num_states = 1;
  g.num_actions = std::move(num_actions);
  g.discount = discount;
  g.mu = {1.0};
  g.state_names = {"s0"};
  g.action_names.resize(g.num_players);
  for (int i = 0; i < g.num_players; ++i)
    for (int a = 0; a < g.num_actions[i]; ++a)
      g.action_names[i].push_back("a" + std::to_string(a));

  const std::int64_t J = g.num_joint_actions();
  if (static_cast<std::int64_t>(phi.size()) != J)
    throw ConfigError("potential table: one entry per joint action required");
  if (zeta.empty()) {
    zeta.resize(g.num_players);
    for (int i = 0; i < g.num_players; ++i) {
      std::int64_t opp = 1;
      for (int k = 0; k < g.num_players; ++k)
        if (k != i) opp *= g.num_actions[k];
      zeta[i].assign(opp, 0.0);
    }
  }
  if (static_cast<int>(zeta.size()) != g.num_players)
    throw ConfigError("zeta: one table per player required");

  g.payoff.assign(g.num_players, std::vector<double>(J, 0.0));
  g.transition.assign(J, 1.0);  // single state: every row is the self loop
  std::vector<int> a(g.num_players);
  for (std::int64_t j = 0; j < J; ++j) {
    g.decode_joint(j, a);
    for (int i = 0; i < g.num_players; ++i) {
      const std::int64_t opp = opponent_index(g, i, a);
      if (opp >= static_cast<std::int64_t>(zeta[i].size()))
        throw ConfigError("zeta: table shape does not match opponents");
      g.payoff[i][j] = phi[j] + zeta[i][opp];
    }
  }

  PotentialGame pg;
  pg.kind = PotentialKind::single_state;
  pg.game = std::move(g);
  pg.phi = std::move(phi);
  pg.zeta = std::move(zeta);
  return pg;
}

// Phi(s, pi).
inline double potential_value(const PotentialGame& pg,
                              const PolicyProfile& pi, int s) {
  switch (pg.kind) {
    case PotentialKind::team:
      return value_function(pg.game, pi, 0)[s];
    case PotentialKind::single_state: {
      const Game& g = pg.game;
      const std::int64_t J = g.num_joint_actions();
      std::vector<int> a(g.num_players);
      double acc = 0.0;
      for (std::int64_t j = 0; j < J; ++j) {
        g.decode_joint(j, a);
        double w = 1.0;
        for (int i = 0; i < g.num_players; ++i) w *= pi.at(i, s, a[i]);
        acc += w * pg.phi[j];
      }
      return acc / (1.0 - g.discount);
    }
    case PotentialKind::none:
      break;
  }
  throw ConfigError("game carries no potential structure");
}

// Phi(mu, pi) = sum_s mu(s) Phi(s, pi).
inline double potential_value(const PotentialGame& pg,
                              const PolicyProfile& pi,
                              std::span<const double> mu) {
  double out = 0.0;
  for (int s = 0; s < pg.game.num_states; ++s)
    out += mu[s] * potential_value(pg, pi, s);
  return out;
}

struct MpgReport {
  bool passed = false;
  double max_violation = 0.0;
  double tol = 0.0;
  int samples = 0;
};

// Samples unilateral deviations (player i uniform; every policy row
// Dirichlet(1,...,1)) and checks Phi(s, pi') - Phi(s, pi) =
// V_i(s, pi') - V_i(s, pi) at every state and at mu.
inline MpgReport verify_mpg(const PotentialGame& pg, int num_samples = 100,
                            double tol = 1e-8, std::uint64_t seed = 7) {
  const Game& g = pg.game;
  Rng rng = Rng::stream(seed, 0);
  MpgReport report;
  report.tol = tol;
  report.samples = num_samples;
  for (int n = 0; n < num_samples; ++n) {
    const int i = static_cast<int>(rng.next() % g.num_players);
    PolicyProfile pi(g.num_states, g.num_actions);
    for (int k = 0; k < g.num_players; ++k)
      for (int s = 0; s < g.num_states; ++s)
        pi.set_row(k, s, rng.simplex_point(g.num_actions[k]));
    PolicyProfile pi2 = pi;
    for (int s = 0; s < g.num_states; ++s)
      pi2.set_row(i, s, rng.simplex_point(g.num_actions[i]));

    const auto v1 = value_function(g, pi, i);
    const auto v2 = value_function(g, pi2, i);
    double mu_gap = 0.0;
    for (int s = 0; s < g.num_states; ++s) {
      const double dphi =
          potential_value(pg, pi2, s) - potential_value(pg, pi, s);
      const double dv = v2[s] - v1[s];
      report.max_violation =
          std::max(report.max_violation, std::abs(dphi - dv));
      mu_gap += g.mu[s] * (dphi - dv);
    }
    report.max_violation = std::max(report.max_violation, std::abs(mu_gap));
  }
  report.passed = report.max_violation <= tol;
  return report;
}

struct PotentialMaximum {
  double value = 0.0;
  PolicyProfile argmax;
};

namespace detail {

// Odometer over deterministic profiles: choice[player][state] -> action.
inline bool next_choice(const Game& g,
                        std::vector<std::vector<int>>& choice) {
  for (int i = 0; i < g.num_players; ++i)
    for (int s = 0; s < g.num_states; ++s) {
      if (++choice[i][s] < g.num_actions[i]) return true;
      choice[i][s] = 0;
    }
  return false;
}

inline double deterministic_profile_count(const Game& g) {
  double count = 1.0;
  for (int i = 0; i < g.num_players; ++i)
    for (int s = 0; s < g.num_states; ++s) count *= g.num_actions[i];
  return count;
}

}  // namespace detail

// max over stationary product policies of Phi(mu, .), attained at a
// deterministic profile (centralized control for team games, vertex of a
// multilinear function otherwise), found by exhaustive enumeration.
inline PotentialMaximum potential_maximum(const PotentialGame& pg,
                                          std::span<const double> mu,
                                          std::int64_t cap = 1'000'000) {
  const Game& g = pg.game;
  if (detail::deterministic_profile_count(g) > static_cast<double>(cap))
    throw EnumerationTooLarge("deterministic profile count exceeds cap");
  std::vector<std::vector<int>> choice(
      g.num_players, std::vector<int>(g.num_states, 0));
  PotentialMaximum best;
  bool first = true;
  do {
    const auto pi = PolicyProfile::deterministic(g, choice);
    const double val = potential_value(pg, pi, mu);
    if (first || val > best.value) {
      best.value = val;
      best.argmax = pi;
      first = false;
    }
  } while (detail::next_choice(g, choice));
  return best;
}

// phi(tau) in the descent analysis: max_pi' Phi(mu, pi') - Phi(mu, pi).
// Nonnegative up to enumeration rounding; zero exactly at potential
// maximizers.
inline double lyapunov_gap(const PotentialGame& pg, const PolicyProfile& pi,
                           std::span<const double> mu,
                           std::int64_t cap = 1'000'000) {
  return potential_maximum(pg, mu, cap).value - potential_value(pg, pi, mu);
}

}  // namespace mpg
