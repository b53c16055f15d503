#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mpglab/evaluate.hpp"
#include "mpglab/game.hpp"
#include "mpglab/linalg.hpp"
#include "mpglab/potential.hpp"

namespace mpg {

struct BestResponse {
  std::vector<int> action;   // deterministic maximizer per state
  std::vector<double> value;  // exact value of that policy, every start state
};

// Optimal one-player response against fixed opponent rows: value iteration
// on the induced MDP to sup-norm tolerance tol, greedy extraction with
// lowest-index tie breaking, then exact evaluation of the greedy policy.
// The returned value vector is optimal for every start state simultaneously
// (up to tol).
inline BestResponse best_response(const Game& g, const PolicyProfile& pi,
                                  int player, double tol = 1e-10) {
  const auto m = induced_mdp(g, pi, player);
  const int S = m.num_states;
  const int A = m.num_actions;
  const double delta = g.discount;

  std::vector<double> v(S, 0.0), v2(S);
  // ||v_k - v*|| <= delta^k ||v*||; stop when successive iterates certify
  // the fixed-point error below tol.
  const double stop = tol * (1.0 - delta) / std::max(delta, 1e-3);
  for (std::int64_t iter = 0;; ++iter) {
    double diff = 0.0;
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < A; ++a) {
        const std::size_t sa = static_cast<std::size_t>(s) * A + a;
        double t = m.reward[sa];
        for (int s2 = 0; s2 < S; ++s2)
          t += delta * m.trans[sa * S + s2] * v[s2];
        best = std::max(best, t);
      }
      v2[s] = best;
      diff = std::max(diff, std::abs(v2[s] - v[s]));
    }
    v.swap(v2);
    if (diff <= stop) break;
    if (iter > 1'000'000)
      throw NumericsError("best response: value iteration did not converge");
  }

  BestResponse out;
  out.action.assign(S, 0);
  for (int s = 0; s < S; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
      const std::size_t sa = static_cast<std::size_t>(s) * A + a;
      double t = m.reward[sa];
      for (int s2 = 0; s2 < S; ++s2)
        t += delta * m.trans[sa * S + s2] * v[s2];
      if (t > best) {  // strict: ties resolve to the lowest index
        best = t;
        out.action[s] = a;
      }
    }
  }

  // Exact evaluation of the extracted policy.
  std::vector<double> mat(static_cast<std::size_t>(S) * S);
  std::vector<double> b(S);
  for (int s = 0; s < S; ++s) {
    const std::size_t sa = static_cast<std::size_t>(s) * A + out.action[s];
    b[s] = m.reward[sa];
    for (int s2 = 0; s2 < S; ++s2)
      mat[s * S + s2] =
          (s == s2 ? 1.0 : 0.0) - delta * m.trans[sa * S + s2];
  }
  out.value = solve_certified(mat, b);
  return out;
}

struct NashReport {
  std::vector<std::vector<double>> gap;  // [player][state], >= -1e-9
  double max_gap = 0.0;
  double epsilon = 0.0;
  bool certified = false;
};

// gap[i][s] = V_i(s, BR_i, pi_{-i}) - V_i(s, pi). A bound over all states
// certifies the profile epsilon-Nash for every initial distribution, so no
// distribution argument is needed.
inline NashReport nash_gap(const Game& g, const PolicyProfile& pi,
                           double epsilon = 1e-6) {
  NashReport report;
  report.epsilon = epsilon;
  report.gap.resize(g.num_players);
  for (int i = 0; i < g.num_players; ++i) {
    const auto br = best_response(g, pi, i);
    const auto v = value_function(g, pi, i);
    report.gap[i].resize(g.num_states);
    for (int s = 0; s < g.num_states; ++s) {
      report.gap[i][s] = br.value[s] - v[s];
      report.max_gap = std::max(report.max_gap, report.gap[i][s]);
    }
  }
  report.certified = report.max_gap <= epsilon;
  return report;
}

struct BrViolation {
  int player = 0;
  int state = 0;
  int action = 0;
  double shortfall = 0.0;  // max_a Q(s, a) - Q(s, action)
};

struct BrFixedPointReport {
  bool passed = true;
  double max_shortfall = 0.0;
  std::vector<BrViolation> violations;
};

// Nash characterization via one-stage deviations: pi is Nash iff at every
// (player, state) the support of pi_i(s) (entries > tol) attains
// max_a Q_i(s, a; pi) within tol.
inline BrFixedPointReport br_fixed_point_check(const Game& g,
                                               const PolicyProfile& pi,
                                               double tol = 1e-8) {
  BrFixedPointReport report;
  for (int i = 0; i < g.num_players; ++i) {
    const auto q = q_function(g, pi, i);
    const int A = g.num_actions[i];
    for (int s = 0; s < g.num_states; ++s) {
      double top = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < A; ++a) top = std::max(top, q[s * A + a]);
      for (int a = 0; a < A; ++a) {
        if (pi.at(i, s, a) <= tol) continue;
        const double shortfall = top - q[s * A + a];
        report.max_shortfall = std::max(report.max_shortfall, shortfall);
        if (shortfall > tol) {
          report.passed = false;
          report.violations.push_back({i, s, a, shortfall});
        }
      }
    }
  }
  return report;
}

// All deterministic profiles whose nash_gap certifies at epsilon.
inline std::vector<PolicyProfile> enumerate_nash_deterministic(
    const Game& g, double epsilon = 1e-6, std::int64_t cap = 1'000'000) {
  if (detail::deterministic_profile_count(g) > static_cast<double>(cap))
    throw EnumerationTooLarge("deterministic profile count exceeds cap");
  std::vector<std::vector<int>> choice(
      g.num_players, std::vector<int>(g.num_states, 0));
  std::vector<PolicyProfile> out;
  do {
    const auto pi = PolicyProfile::deterministic(g, choice);
    if (nash_gap(g, pi, epsilon).certified) out.push_back(pi);
  } while (detail::next_choice(g, choice));
  return out;
}

}  // namespace mpg
