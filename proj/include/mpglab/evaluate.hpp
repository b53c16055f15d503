#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mpglab/game.hpp"
#include "mpglab/linalg.hpp"

namespace mpg {

// Exact policy evaluation by dense solves. Everything here is multilinear in
// the raw policy rows: V_i(s, pi) solves (Id - delta P_pi) V = r_{i,pi},
// Q_i(s, a_i; pi) marginalizes opponents out of payoff and transition, and
// the visitation measure d_mu^pi solves the transposed system.

// P_pi(s, s') = sum_j prod_i pi_i(s, a_i(j)) P(s'|s, j); S x S row-major.
inline std::vector<double> policy_transition(const Game& g,
                                             const PolicyProfile& pi) {
  const int S = g.num_states;
  const std::int64_t J = g.num_joint_actions();
  std::vector<double> out(static_cast<std::size_t>(S) * S, 0.0);
  std::vector<int> a(g.num_players);
  for (int s = 0; s < S; ++s)
    for (std::int64_t j = 0; j < J; ++j) {
      g.decode_joint(j, a);
      double w = 1.0;
      for (int i = 0; i < g.num_players; ++i) w *= pi.at(i, s, a[i]);
      if (w == 0.0) continue;
      const auto row = g.transition_row(s, j);
      for (int s2 = 0; s2 < S; ++s2) out[s * S + s2] += w * row[s2];
    }
  return out;
}

// r_{i,pi}(s) = sum_j prod_k pi_k(s, a_k(j)) u_i(s, j).
inline std::vector<double> policy_reward(const Game& g,
                                         const PolicyProfile& pi,
                                         int player) {
  const int S = g.num_states;
  const std::int64_t J = g.num_joint_actions();
  std::vector<double> out(S, 0.0);
  std::vector<int> a(g.num_players);
  for (int s = 0; s < S; ++s)
    for (std::int64_t j = 0; j < J; ++j) {
      g.decode_joint(j, a);
      double w = 1.0;
      for (int i = 0; i < g.num_players; ++i) w *= pi.at(i, s, a[i]);
      out[s] += w * g.u(player, s, j);
    }
  return out;
}

// V_i(s, pi) for every state; residual certified <= 1e-10.
inline std::vector<double> value_function(const Game& g,
                                          const PolicyProfile& pi,
                                          int player) {
  const int S = g.num_states;
  const auto P = policy_transition(g, pi);
  const auto r = policy_reward(g, pi, player);
  std::vector<double> A(static_cast<std::size_t>(S) * S);
  for (int s = 0; s < S; ++s)
    for (int s2 = 0; s2 < S; ++s2)
      A[s * S + s2] = (s == s2 ? 1.0 : 0.0) - g.discount * P[s * S + s2];
  return solve_certified(A, r);
}

// V_i(mu, pi) = sum_s mu(s) V_i(s, pi).
inline double value_at_dist(const Game& g, const PolicyProfile& pi,
                            int player, std::span<const double> mu) {
  const auto v = value_function(g, pi, player);
  double out = 0.0;
  for (int s = 0; s < g.num_states; ++s) out += mu[s] * v[s];
  return out;
}

// Player i's single-agent view with every opponent row frozen:
// reward(s, a_i) = u_i(s, a_i, pi_{-i}), trans(s, a_i, s') likewise.
struct InducedMdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> reward;  // [s * A + a]
  std::vector<double> trans;   // [(s * A + a) * S + s2]
};

inline InducedMdp induced_mdp(const Game& g, const PolicyProfile& pi,
                              int player) {
  const int S = g.num_states;
  const int A = g.num_actions[player];
  const std::int64_t J = g.num_joint_actions();
  InducedMdp m;
  m.num_states = S;
  m.num_actions = A;
  m.reward.assign(static_cast<std::size_t>(S) * A, 0.0);
  m.trans.assign(static_cast<std::size_t>(S) * A * S, 0.0);
  std::vector<int> a(g.num_players);
  for (int s = 0; s < S; ++s)
    for (std::int64_t j = 0; j < J; ++j) {
      g.decode_joint(j, a);
      double w = 1.0;
      for (int k = 0; k < g.num_players; ++k)
        if (k != player) w *= pi.at(k, s, a[k]);
      const std::size_t sa = static_cast<std::size_t>(s) * A + a[player];
      m.reward[sa] += w * g.u(player, s, j);
      if (w == 0.0) continue;
      const auto row = g.transition_row(s, j);
      for (int s2 = 0; s2 < S; ++s2) m.trans[sa * S + s2] += w * row[s2];
    }
  return m;
}

// Q_i(s, a_i; pi) = u_i(s, a_i, pi_{-i})
//                 + delta sum_{s'} P(s'|s, a_i, pi_{-i}) V_i(s', pi).
inline std::vector<double> q_function(const Game& g, const PolicyProfile& pi,
                                      int player) {
  const auto m = induced_mdp(g, pi, player);
  const auto v = value_function(g, pi, player);
  std::vector<double> q(m.reward.size());
  for (std::size_t sa = 0; sa < q.size(); ++sa) {
    double cont = 0.0;
    for (int s2 = 0; s2 < m.num_states; ++s2)
      cont += m.trans[sa * m.num_states + s2] * v[s2];
    q[sa] = m.reward[sa] + g.discount * cont;
  }
  return q;
}

// A_i(s, a_i; pi) = Q_i(s, a_i; pi) - V_i(s, pi).
inline std::vector<double> advantage(const Game& g, const PolicyProfile& pi,
                                     int player) {
  auto q = q_function(g, pi, player);
  const auto v = value_function(g, pi, player);
  const int A = g.num_actions[player];
  for (int s = 0; s < g.num_states; ++s)
    for (int a = 0; a < A; ++a) q[s * A + a] -= v[s];
  return q;
}

// Discounted state visitation started from mu:
// d(s) = (1 - delta) sum_s0 mu(s0) sum_k delta^k Pr(s^k = s | s^0 = s0),
// solved as (Id - delta P_pi^T) d = (1 - delta) mu. Sums to one and
// dominates (1 - delta) mu entrywise.
inline std::vector<double> discounted_visitation(const Game& g,
                                                 const PolicyProfile& pi,
                                                 std::span<const double> mu) {
  const int S = g.num_states;
  const auto P = policy_transition(g, pi);
  std::vector<double> A(static_cast<std::size_t>(S) * S);
  std::vector<double> b(S);
  for (int s = 0; s < S; ++s) {
    b[s] = (1.0 - g.discount) * mu[s];
    for (int s2 = 0; s2 < S; ++s2)
      A[s * S + s2] = (s == s2 ? 1.0 : 0.0) - g.discount * P[s2 * S + s];
  }
  return solve_certified(A, b);
}

// One application of player i's policy-coupled Bellman operator:
// (T q)(s, a_i) = u_i(s, a_i, pi_{-i})
//   + delta sum_{s'} P(s'|s, a_i, pi_{-i}) sum_{a'} pi_i(s', a') q(s', a').
// A delta-contraction in the sup norm with fixed point Q_i(., .; pi).
inline std::vector<double> bellman_operator(const Game& g,
                                            const PolicyProfile& pi,
                                            int player,
                                            std::span<const double> q) {
  const auto m = induced_mdp(g, pi, player);
  const int S = m.num_states;
  const int A = m.num_actions;
  std::vector<double> mixed(S, 0.0);  // sum_a' pi_i(s', a') q(s', a')
  for (int s2 = 0; s2 < S; ++s2)
    for (int a2 = 0; a2 < A; ++a2)
      mixed[s2] += pi.at(player, s2, a2) * q[s2 * A + a2];
  std::vector<double> out(m.reward.size());
  for (std::size_t sa = 0; sa < out.size(); ++sa) {
    double cont = 0.0;
    for (int s2 = 0; s2 < S; ++s2) cont += m.trans[sa * S + s2] * mixed[s2];
    out[sa] = m.reward[sa] + g.discount * cont;
  }
  return out;
}

// dV_i(mu, pi) / dpi_i(s, a_i) = d_mu^pi(s) Q_i(s, a_i; pi) / (1 - delta),
// the derivative of the multilinear extension in the raw table entry.
inline std::vector<double> policy_gradient(const Game& g,
                                           const PolicyProfile& pi,
                                           int player,
                                           std::span<const double> mu) {
  const auto d = discounted_visitation(g, pi, mu);
  auto q = q_function(g, pi, player);
  const int A = g.num_actions[player];
  for (int s = 0; s < g.num_states; ++s)
    for (int a = 0; a < A; ++a)
      q[s * A + a] *= d[s] / (1.0 - g.discount);
  return q;
}

struct PerformanceDifference {
  int player = -1;  // the unilateral deviator; -1 when the profiles coincide
  double lhs = 0.0;  // V_i(mu, pi) - V_i(mu, pi_base)
  double rhs = 0.0;  // (1/(1-delta)) sum_s d_mu^pi(s) A_i(s, pi_i; pi_base)
};

// Both sides of the unilateral performance-difference identity; the
// visitation measure is taken under the deviating profile pi and the
// advantage under the base profile. Throws DeviatorMismatch if the profiles
// differ in more than one player's component.
inline PerformanceDifference performance_difference(
    const Game& g, const PolicyProfile& pi, const PolicyProfile& pi_base,
    std::span<const double> mu) {
  int deviator = -1;
  for (int i = 0; i < g.num_players; ++i)
    for (int s = 0; s < g.num_states && deviator != -2; ++s)
      for (int a = 0; a < g.num_actions[i]; ++a)
        if (pi.at(i, s, a) != pi_base.at(i, s, a)) {
          if (deviator >= 0 && deviator != i) deviator = -2;
          if (deviator == -1) deviator = i;
          break;
        }
  if (deviator == -2)
    throw DeviatorMismatch("profiles differ in more than one component");

  PerformanceDifference out;
  if (deviator == -1) return out;
  out.player = deviator;
  out.lhs = value_at_dist(g, pi, deviator, mu) -
            value_at_dist(g, pi_base, deviator, mu);
  const auto d = discounted_visitation(g, pi, mu);
  const auto adv = advantage(g, pi_base, deviator);
  const int A = g.num_actions[deviator];
  double acc = 0.0;
  for (int s = 0; s < g.num_states; ++s)
    for (int a = 0; a < A; ++a)
      acc += d[s] * pi.at(deviator, s, a) * adv[s * A + a];
  out.rhs = acc / (1.0 - g.discount);
  return out;
}

}  // namespace mpg
