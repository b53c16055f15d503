#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mpglab/evaluate.hpp"
#include "mpglab/game.hpp"
#include "mpglab/oracle.hpp"
#include "mpglab/potential.hpp"

namespace mpg {

// Explicit Euler discretization of the best-reply flow
//   d pi_i(s) / d tau = gamma_i(s) (br_i(s; pi) - pi_i(s)),
// where br is the lowest-index maximizer of the exact Q row, matching the
// learner's tie break. Steps are convex combinations (dt * gamma <= 1), so
// rows stay on the simplex exactly.
struct FlowConfig {
  double dt = 0.01;
  double horizon = 50.0;
  double rate_floor = 1e-9;                 // eta: min admissible rate
  std::vector<std::vector<double>> gamma;   // [player][state]; empty => 1.0
};

struct FlowPoint {
  double tau = 0.0;
  double phi = 0.0;       // max_pi' Phi(mu, pi') - Phi(mu, pi(tau))
  double nash_gap = 0.0;
  bool br_switch = false;  // greedy selection changed at this point
  PolicyProfile policy;
};

struct FlowTrajectory {
  double potential_max = 0.0;
  std::vector<FlowPoint> points;  // includes tau = 0 and tau = horizon
};

inline FlowTrajectory integrate_flow(const PotentialGame& pg,
                                     PolicyProfile pi, FlowConfig cfg) {
  const Game& g = pg.game;
  if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0))
    throw ConfigError("flow: dt and horizon must be positive");
  if (cfg.gamma.empty())
    cfg.gamma.assign(g.num_players,
                     std::vector<double>(g.num_states, 1.0));
  if (static_cast<int>(cfg.gamma.size()) != g.num_players)
    throw ConfigError("flow: one rate row per player required");
  double max_rate = 0.0;
  for (int i = 0; i < g.num_players; ++i) {
    if (static_cast<int>(cfg.gamma[i].size()) != g.num_states)
      throw ConfigError("flow: one rate per state required");
    for (double r : cfg.gamma[i]) {
      if (!(r >= cfg.rate_floor) || !(cfg.rate_floor > 0.0))
        throw ConfigError("flow: rates must stay above a positive floor");
      max_rate = std::max(max_rate, r);
    }
  }
  if (cfg.dt * max_rate > 1.0)
    throw ConfigError("flow: dt times the largest rate must not exceed 1");
  validate_policy(g, pi);

  const double phi_max = potential_maximum(pg, g.mu).value;
  const auto steps = static_cast<std::int64_t>(
      std::llround(cfg.horizon / cfg.dt));

  // Greedy selection at the current profile, all rows synchronously.
  auto selection = [&](const PolicyProfile& p) {
    std::vector<std::vector<int>> sel(g.num_players,
                                      std::vector<int>(g.num_states, 0));
    for (int i = 0; i < g.num_players; ++i) {
      const auto q = q_function(g, p, i);
      const int A = g.num_actions[i];
      for (int s = 0; s < g.num_states; ++s) {
        int best = 0;
        for (int a = 1; a < A; ++a)
          if (q[s * A + a] > q[s * A + best]) best = a;
        sel[i][s] = best;
      }
    }
    return sel;
  };

  FlowTrajectory traj;
  traj.potential_max = phi_max;
  traj.points.reserve(steps + 1);
  std::vector<std::vector<int>> prev_sel;
  for (std::int64_t k = 0; k <= steps; ++k) {
    const auto sel = selection(pi);
    FlowPoint point;
    point.tau = k * cfg.dt;
    point.phi = phi_max - potential_value(pg, pi, g.mu);
    point.nash_gap = nash_gap(g, pi).max_gap;
    point.br_switch = (k > 0 && sel != prev_sel);
    point.policy = pi;
    traj.points.push_back(std::move(point));
    prev_sel = sel;
    if (k == steps) break;
    for (int i = 0; i < g.num_players; ++i)
      for (int s = 0; s < g.num_states; ++s) {
        const double step = cfg.dt * cfg.gamma[i][s];
        for (int a = 0; a < g.num_actions[i]; ++a) {
          double& p = pi.at(i, s, a);
          p += step * ((a == sel[i][s] ? 1.0 : 0.0) - p);
        }
      }
  }
  return traj;
}

struct MonotonicityReport {
  std::int64_t steps = 0;
  std::int64_t violations = 0;     // phi rises above tol off switch steps
  std::int64_t switch_steps = 0;   // steps adjacent to a selection change
  double max_violation = 0.0;      // largest non-switch rise
  double max_switch_rise = 0.0;    // largest rise at a switch step
  double tol_step = 0.0;
  bool passed = false;
};

// Checks phi(tau) nonincreasing along the trajectory up to tol_step per
// step. Steps adjacent to a greedy-selection change (the crossing step and
// the first step under the new selection) are exempt and reported
// separately: crossing an indifference surface with a finite step can
// overshoot the ridge by O(dt).
inline MonotonicityReport lyapunov_monotonicity_report(
    const FlowTrajectory& traj, double tol_step) {
  MonotonicityReport report;
  report.tol_step = tol_step;
  const auto& pts = traj.points;
  report.steps = static_cast<std::int64_t>(pts.size()) - 1;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double rise = pts[k + 1].phi - pts[k].phi;
    const bool at_switch = pts[k].br_switch || pts[k + 1].br_switch;
    if (at_switch) {
      ++report.switch_steps;
      report.max_switch_rise = std::max(report.max_switch_rise, rise);
      continue;
    }
    if (rise > tol_step) {
      ++report.violations;
      report.max_violation = std::max(report.max_violation, rise);
    }
  }
  report.passed = report.violations == 0;
  return report;
}

}  // namespace mpg
