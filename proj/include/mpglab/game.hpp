#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mpglab/errors.hpp"

namespace mpg {

// Finite discounted stochastic game with dense payoff and transition tables.
// Joint actions are flattened player-last: index(a) = sum_i a_i * stride_i
// with stride_i = prod_{k > i} |A_k|, so the last player varies fastest.
struct Game {
  int num_players = 0;
  int num_states = 0;
  std::vector<int> num_actions;  // per player
  double discount = 0.0;
  std::vector<double> mu;  // initial state distribution, full support
  std::vector<std::string> state_names;                 // size num_states
  std::vector<std::vector<std::string>> action_names;   // per player
  std::vector<std::vector<double>> payoff;  // [player][s * J + j]
  std::vector<double> transition;           // [(s * J + j) * S + s2]

  std::int64_t num_joint_actions() const {
    std::int64_t j = 1;
    for (int a : num_actions) j *= a;
    return j;
  }

  std::vector<std::int64_t> strides() const {
    std::vector<std::int64_t> st(num_actions.size(), 1);
    for (int i = num_players - 2; i >= 0; --i)
      st[i] = st[i + 1] * num_actions[i + 1];
    return st;
  }

  std::int64_t joint_index(std::span<const int> actions) const {
    const auto st = strides();
    std::int64_t j = 0;
    for (int i = 0; i < num_players; ++i) j += actions[i] * st[i];
    return j;
  }

  void decode_joint(std::int64_t j, std::span<int> actions) const {
    for (int i = num_players - 1; i >= 0; --i) {
      actions[i] = static_cast<int>(j % num_actions[i]);
      j /= num_actions[i];
    }
  }

  double u(int player, int s, std::int64_t j) const {
    return payoff[player][s * num_joint_actions() + j];
  }

  double p(int s, std::int64_t j, int s2) const {
    return transition[(s * num_joint_actions() + j) * num_states + s2];
  }

  std::span<const double> transition_row(int s, std::int64_t j) const {
    return {transition.data() + (s * num_joint_actions() + j) * num_states,
            static_cast<std::size_t>(num_states)};
  }

  double max_abs_payoff() const {
    double m = 0.0;
    for (const auto& table : payoff)
      for (double v : table) m = std::max(m, std::abs(v));
    return m;
  }

  bool operator==(const Game&) const = default;
};

// Stationary product policy: one row on the action simplex per (player,
// state). Rows are stored raw; evaluation routines treat them multilinearly
// and never renormalize, so off-simplex tables (finite-difference probes)
// evaluate consistently.
class PolicyProfile {
 public:
  PolicyProfile() = default;

  PolicyProfile(int num_states, std::vector<int> num_actions)
      : num_states_(num_states), num_actions_(std::move(num_actions)) {
    rows_.resize(num_actions_.size());
    for (std::size_t i = 0; i < num_actions_.size(); ++i)
      rows_[i].assign(
          static_cast<std::size_t>(num_states_) * num_actions_[i],
          1.0 / num_actions_[i]);
  }

  static PolicyProfile uniform(const Game& g) {
    return PolicyProfile(g.num_states, g.num_actions);
  }

  // choice[player][state] -> action index played with probability one.
  static PolicyProfile deterministic(
      const Game& g, const std::vector<std::vector<int>>& choice) {
    PolicyProfile pi(g.num_states, g.num_actions);
    for (int i = 0; i < g.num_players; ++i)
      for (int s = 0; s < g.num_states; ++s) {
        for (int a = 0; a < g.num_actions[i]; ++a) pi.at(i, s, a) = 0.0;
        pi.at(i, s, choice[i][s]) = 1.0;
      }
    return pi;
  }

  int num_players() const { return static_cast<int>(num_actions_.size()); }
  int num_states() const { return num_states_; }
  int num_actions(int player) const { return num_actions_[player]; }

  double at(int player, int s, int a) const {
    return rows_[player][static_cast<std::size_t>(s) * num_actions_[player] +
                         a];
  }
  double& at(int player, int s, int a) {
    return rows_[player][static_cast<std::size_t>(s) * num_actions_[player] +
                         a];
  }

  std::span<const double> row(int player, int s) const {
    return {rows_[player].data() +
                static_cast<std::size_t>(s) * num_actions_[player],
            static_cast<std::size_t>(num_actions_[player])};
  }

  void set_row(int player, int s, std::span<const double> r) {
    for (int a = 0; a < num_actions_[player]; ++a) at(player, s, a) = r[a];
  }

  bool operator==(const PolicyProfile&) const = default;

 private:
  int num_states_ = 0;
  std::vector<int> num_actions_;
  std::vector<std::vector<double>> rows_;  // [player][s * A_i + a]
};

namespace detail {

// Strong connectivity plus aperiodicity of the positive-entry digraph of
// P(.|., j). Period = gcd over edges (u, v) of depth(u) + 1 - depth(v) for
// BFS depths from any root of a strongly connected graph.
inline bool irreducible_aperiodic(const Game& g, std::int64_t j) {
  const int S = g.num_states;
  auto edge = [&](int s, int s2) { return g.p(s, j, s2) > 0.0; };

  auto reach = [&](bool forward) {
    std::vector<char> seen(S, 0);
    std::vector<int> queue{0};
    seen[0] = 1;
    while (!queue.empty()) {
      const int u = queue.back();
      queue.pop_back();
      for (int v = 0; v < S; ++v) {
        const bool has = forward ? edge(u, v) : edge(v, u);
        if (has && !seen[v]) {
          seen[v] = 1;
          queue.push_back(v);
        }
      }
    }
    for (char c : seen)
      if (!c) return false;
    return true;
  };
  if (!reach(true) || !reach(false)) return false;

  std::vector<int> depth(S, -1);
  depth[0] = 0;
  std::vector<int> queue{0};
  std::size_t head = 0;
  while (head < queue.size()) {
    const int u = queue[head++];
    for (int v = 0; v < S; ++v)
      if (edge(u, v) && depth[v] < 0) {
        depth[v] = depth[u] + 1;
        queue.push_back(v);
      }
  }
  long long g_period = 0;
  for (int u = 0; u < S; ++u)
    for (int v = 0; v < S; ++v)
      if (edge(u, v))
        g_period = std::gcd(g_period,
                            static_cast<long long>(
                                std::abs(depth[u] + 1 - depth[v])));
  return g_period == 1;
}

}  // namespace detail

struct GameReport {
  double max_payoff = 0.0;          // \bar u = max |u|
  std::int64_t witness_action = -1;  // joint action certifying ergodicity
};

// Structural validation: table shapes, finite payoffs, discount in [0, 1),
// stochastic transition rows, full-support mu, and existence of a joint
// action whose chain is irreducible and aperiodic.
inline GameReport validate_game(const Game& g, double tol = 1e-9) {
  if (g.num_players <= 0 || g.num_states <= 0)
    throw ConfigError("game: needs at least one player and one state");
  if (static_cast<int>(g.num_actions.size()) != g.num_players)
    throw ConfigError("game: one action count per player required");
  for (int a : g.num_actions)
    if (a <= 0) throw ConfigError("game: every player needs an action");
  if (!(g.discount >= 0.0 && g.discount < 1.0))
    throw ConfigError("game: discount must lie in [0, 1)");

  const std::int64_t J = g.num_joint_actions();
  const std::size_t table = static_cast<std::size_t>(g.num_states) * J;
  if (g.payoff.size() != static_cast<std::size_t>(g.num_players))
    throw ConfigError("game: one payoff table per player required");
  for (const auto& t : g.payoff) {
    if (t.size() != table) throw ConfigError("game: payoff table shape");
    for (double v : t)
      if (!std::isfinite(v)) throw ConfigError("game: payoff not finite");
  }
  if (g.transition.size() != table * g.num_states)
    throw ConfigError("game: transition table shape");

  for (int s = 0; s < g.num_states; ++s)
    for (std::int64_t j = 0; j < J; ++j) {
      double sum = 0.0;
      for (int s2 = 0; s2 < g.num_states; ++s2) {
        const double p = g.p(s, j, s2);
        if (!(p >= 0.0))
          throw StochasticityError("transition: negative probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol)
        throw StochasticityError("transition: row does not sum to one");
    }

  if (g.mu.size() != static_cast<std::size_t>(g.num_states))
    throw ConfigError("game: mu shape");
  double mu_sum = 0.0;
  for (double m : g.mu) {
    if (!(m > 0.0))
      throw SupportError("mu: initial distribution needs full support");
    mu_sum += m;
  }
  if (std::abs(mu_sum - 1.0) > tol)
    throw SupportError("mu: does not sum to one");

  GameReport report;
  report.max_payoff = g.max_abs_payoff();
  for (std::int64_t j = 0; j < J; ++j)
    if (detail::irreducible_aperiodic(g, j)) {
      report.witness_action = j;
      return report;
    }
  throw IrreducibilityError(
      "no joint action induces an irreducible aperiodic chain");
}

// Rows must be simplex points within tol and shapes must match the game.
inline void validate_policy(const Game& g, const PolicyProfile& pi,
                            double tol = 1e-9) {
  if (pi.num_players() != g.num_players || pi.num_states() != g.num_states)
    throw ConfigError("policy: shape does not match game");
  for (int i = 0; i < g.num_players; ++i) {
    if (pi.num_actions(i) != g.num_actions[i])
      throw ConfigError("policy: action count does not match game");
    for (int s = 0; s < g.num_states; ++s) {
      double sum = 0.0;
      for (int a = 0; a < g.num_actions[i]; ++a) {
        const double p = pi.at(i, s, a);
        if (!(p >= -tol) || !(p <= 1.0 + tol))
          throw SupportError("policy: entry outside [0, 1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol)
        throw SupportError("policy: row does not sum to one");
    }
  }
}

}  // namespace mpg
