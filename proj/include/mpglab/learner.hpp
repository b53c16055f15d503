#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mpglab/errors.hpp"
#include "mpglab/game.hpp"
#include "mpglab/oracle.hpp"
#include "mpglab/potential.hpp"
#include "mpglab/rng.hpp"

namespace mpg {

// Power-law step sizes: alpha(n) = z n^{-c1} for the q-estimate (fast
// timescale), beta(n) = y n^{-c2} for the policy (slow timescale).
// Admissible exponents: 1/2 < c1 < c2 <= 1. The lower bound keeps squared
// q-steps summable, the upper bound keeps both sums divergent, and the
// strict ordering drives beta(n)/alpha(n) -> 0. Scales must lie in (0, 1]
// so every step stays in (0, 1].
struct StepSchedule {
  double z = 1.0;
  double c1 = 0.6;
  double y = 1.0;
  double c2 = 0.85;

  double alpha(std::int64_t n) const {
    return z * std::pow(static_cast<double>(n), -c1);
  }
  double beta(std::int64_t n) const {
    return y * std::pow(static_cast<double>(n), -c2);
  }
};

inline void validate_schedule(const StepSchedule& s) {
  if (!std::isfinite(s.z) || !std::isfinite(s.y) || !std::isfinite(s.c1) ||
      !std::isfinite(s.c2))
    throw ConfigError("step schedule: parameters must be finite");
  if (!(s.z > 0.0 && s.z <= 1.0) || !(s.y > 0.0 && s.y <= 1.0))
    throw ScheduleRangeError("step schedule: scales must lie in (0, 1]");
  if (s.c1 <= 0.5)
    throw SummabilityError(
        "step schedule: q exponent must exceed 1/2 so squared steps sum");
  if (s.c1 > 1.0 || s.c2 > 1.0)
    throw DivergenceError(
        "step schedule: exponents above 1 make the step sums converge");
  if (s.c2 <= s.c1)
    throw TimescaleError(
        "step schedule: policy exponent must exceed q exponent");
}

// Cross-player admissibility: step-size ratios across players must stay
// bounded away from 0 and infinity, which for power laws pins the
// exponents (scales may differ).
inline void validate_schedules(std::span<const StepSchedule> all) {
  for (const auto& s : all) validate_schedule(s);
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].c1 != all[0].c1 || all[i].c2 != all[0].c2)
      throw HeterogeneityError(
          "step schedules: players must share decay exponents");
}

struct LearnerConfig {
  int num_states = 0;
  int num_actions = 0;
  double discount = 0.0;
  double theta = 0.05;  // exploration weight in (0, 1]; 1 samples uniformly
  StepSchedule schedule;
  double q_init = 0.0;
  bool br_uses_stale_q = false;  // best reply from the pre-update q-entry
  std::vector<double> pi0;       // [s * A + a]; empty selects uniform rows
};

// One player's private view of the dynamics. The class sees only its own
// action set, realized states, and its own realized rewards; opponents,
// payoff tables, and transition probabilities are structurally out of
// reach. Per iterate it (1) increments its visit counters, (2) moves one
// q-entry toward the realized one-step return, (3) moves one policy row
// toward the greedy action of its own q-estimate, and (4) samples the next
// action from the exploration mixture.
class Learner {
 public:
  Learner(LearnerConfig cfg, Rng rng) : cfg_(cfg), rng_(rng) {
    if (cfg_.num_states <= 0 || cfg_.num_actions <= 0)
      throw ConfigError("learner: empty state or action set");
    if (!(cfg_.discount >= 0.0 && cfg_.discount < 1.0))
      throw ConfigError("learner: discount must lie in [0, 1)");
    if (!(cfg_.theta > 0.0 && cfg_.theta <= 1.0))
      throw ConfigError("learner: exploration weight must lie in (0, 1]");
    validate_schedule(cfg_.schedule);
    const std::size_t table =
        static_cast<std::size_t>(cfg_.num_states) * cfg_.num_actions;
    q_.assign(table, cfg_.q_init);
    if (cfg_.pi0.empty()) {
      pi_.assign(table, 1.0 / cfg_.num_actions);
    } else {
      if (cfg_.pi0.size() != table)
        throw ConfigError("learner: initial policy shape");
      pi_ = cfg_.pi0;
      for (int s = 0; s < cfg_.num_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < cfg_.num_actions; ++a) sum += row(pi_, s)[a];
        if (std::abs(sum - 1.0) > 1e-9)
          throw SupportError("learner: initial policy row off the simplex");
      }
    }
    n_.assign(cfg_.num_states, 0);
    n_sa_.assign(table, 0);
    mix_.assign(cfg_.num_actions, 0.0);
  }

  // Stage 0: remember the start state and sample the first action.
  int start(int s0) {
    last_state_ = s0;
    last_action_ = sample_action(s0);
    return last_action_;
  }

  // Full iterate: counters, q-step, policy step at the previous state, then
  // the next action at the observed state.
  int step(int s_curr, double r_prev) {
    record_visit(last_state_, last_action_);
    q_update(last_state_, last_action_, r_prev, s_curr);
    policy_update(last_state_);
    last_state_ = s_curr;
    last_action_ = sample_action(s_curr);
    return last_action_;
  }

  // n(s) += 1 and n(s, a) += 1; each visit feeds exactly one pair, so
  // sum_a n(s, a) == n(s) always.
  void record_visit(int s, int a) {
    ++n_[s];
    ++n_sa_[static_cast<std::size_t>(s) * cfg_.num_actions + a];
  }

  // q(s, a) += alpha(n(s, a)) * (r + delta * <pi(s'), q(s')> - q(s, a)).
  // The continuation mixes the pre-update policy row and q row at s', and
  // the counter has already been incremented for this iterate.
  void q_update(int s_prev, int a_prev, double r_prev, int s_curr) {
    double cont = 0.0;
    for (int a = 0; a < cfg_.num_actions; ++a)
      cont += row(pi_, s_curr)[a] * row(q_, s_curr)[a];
    const std::size_t sa =
        static_cast<std::size_t>(s_prev) * cfg_.num_actions + a_prev;
    stale_state_ = s_prev;
    stale_action_ = a_prev;
    stale_entry_ = q_[sa];
    const double alpha = cfg_.schedule.alpha(n_sa_[sa]);
    q_[sa] += alpha * (r_prev + cfg_.discount * cont - q_[sa]);
  }

  // pi(s) += beta(n(s)) * (e_br - pi(s)): a convex step toward the vertex
  // of the greedy action, so the row stays on the simplex exactly.
  void policy_update(int s) {
    const int br = cfg_.br_uses_stale_q ? greedy_action_stale(s)
                                        : greedy_action(s);
    const double beta = cfg_.schedule.beta(n_[s]);
    double sum = 0.0;
    for (int a = 0; a < cfg_.num_actions; ++a) {
      double& p = pi_[static_cast<std::size_t>(s) * cfg_.num_actions + a];
      p += beta * ((a == br ? 1.0 : 0.0) - p);
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)  // defensive; convex steps do not drift
      for (int a = 0; a < cfg_.num_actions; ++a)
        pi_[static_cast<std::size_t>(s) * cfg_.num_actions + a] /= sum;
  }

  // a ~ (1 - theta) pi(s) + theta / |A|: every action keeps probability at
  // least theta / |A| forever.
  int sample_action(int s) {
    const double floor = cfg_.theta / cfg_.num_actions;
    for (int a = 0; a < cfg_.num_actions; ++a)
      mix_[a] = (1.0 - cfg_.theta) * row(pi_, s)[a] + floor;
    return rng_.categorical(mix_);
  }

  // Lowest-index maximizer of the q row at s.
  int greedy_action(int s) const {
    const auto r = row(q_, s);
    int best = 0;
    for (int a = 1; a < cfg_.num_actions; ++a)
      if (r[a] > r[best]) best = a;
    return best;
  }

  std::span<const double> q_row(int s) const { return row(q_, s); }
  std::span<const double> policy_row(int s) const { return row(pi_, s); }
  std::int64_t state_count(int s) const { return n_[s]; }
  std::int64_t state_action_count(int s, int a) const {
    return n_sa_[static_cast<std::size_t>(s) * cfg_.num_actions + a];
  }
  int num_states() const { return cfg_.num_states; }
  int num_actions() const { return cfg_.num_actions; }

  double max_abs_q() const {
    double m = 0.0;
    for (double v : q_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::span<const double> row(const std::vector<double>& t, int s) const {
    return {t.data() + static_cast<std::size_t>(s) * cfg_.num_actions,
            static_cast<std::size_t>(cfg_.num_actions)};
  }

  // Greedy action as if the last q_update had not happened yet: the literal
  // reading of the policy recursion, which pairs the step-t policy move
  // with the step-(t-1) q-estimate.
  int greedy_action_stale(int s) const {
    const auto r = row(q_, s);
    auto value = [&](int a) {
      return (s == stale_state_ && a == stale_action_) ? stale_entry_ : r[a];
    };
    int best = 0;
    for (int a = 1; a < cfg_.num_actions; ++a)
      if (value(a) > value(best)) best = a;
    return best;
  }

  LearnerConfig cfg_;
  Rng rng_;
  std::vector<double> q_, pi_;        // [s * A + a]
  std::vector<std::int64_t> n_;       // state visits
  std::vector<std::int64_t> n_sa_;    // state-action visits
  std::vector<double> mix_;           // scratch row for sampling
  int last_state_ = -1;
  int last_action_ = -1;
  int stale_state_ = -1;
  int stale_action_ = -1;
  double stale_entry_ = 0.0;
};

// The environment side: holds the true game, samples transitions, and
// reports realized rewards. Learners never touch it directly.
class Environment {
 public:
  Environment(const Game& g, Rng rng) : g_(&g), rng_(rng) {}

  int reset() {
    state_ = rng_.categorical(g_->mu);
    iterate_ = 0;
    return state_;
  }

  // Plays the joint action, writes each player's realized reward, advances
  // the state, and increments the iterate counter by exactly one.
  int step(std::span<const int> actions, std::span<double> rewards_out) {
    const std::int64_t j = g_->joint_index(actions);
    for (int i = 0; i < g_->num_players; ++i)
      rewards_out[i] = g_->u(i, state_, j);
    state_ = rng_.categorical(g_->transition_row(state_, j));
    ++iterate_;
    return state_;
  }

  int state() const { return state_; }
  std::int64_t iterate() const { return iterate_; }

 private:
  const Game* g_;
  Rng rng_;
  int state_ = 0;
  std::int64_t iterate_ = 0;
};

struct MetricsRow {
  std::int64_t iterate = 0;
  double nash_gap = 0.0;           // max over players and states
  double q_tracking_error = 0.0;   // max |q_i(s,a) - Q_i(s,a; pi)|
  double potential_value = 0.0;    // Phi(mu, pi)
  std::int64_t min_state_visits = 0;
};

struct RunMetrics {
  std::uint64_t seed = 0;
  std::vector<MetricsRow> rows;
  PolicyProfile final_policy;
  std::vector<std::vector<double>> final_q;  // per player, [s * A + a]
};

struct DynamicsSetup {
  std::vector<double> theta;             // per player
  std::vector<StepSchedule> schedules;   // per player
  double q_init = 0.0;
  bool br_uses_stale_q = false;
  std::int64_t iterations = 2'000'000;
  std::int64_t metrics_cadence = 10'000;
};

// Runs the coupled learner/environment loop from one master seed (stream 0
// drives the environment, stream i+1 drives player i) and records metrics
// every metrics_cadence iterates and at the final iterate. Metrics are
// computed by the omniscient evaluation layer; the learners themselves only
// ever see states and their own rewards.
inline RunMetrics run_dynamics(const PotentialGame& pg,
                               const DynamicsSetup& setup,
                               std::uint64_t seed) {
  const Game& g = pg.game;
  const int P = g.num_players;
  if (static_cast<int>(setup.theta.size()) != P ||
      static_cast<int>(setup.schedules.size()) != P)
    throw ConfigError("dynamics: one theta and schedule per player required");
  validate_schedules(setup.schedules);
  if (setup.iterations < 1 || setup.metrics_cadence < 1)
    throw ConfigError("dynamics: iterations and cadence must be positive");

  std::vector<Learner> learners;
  learners.reserve(P);
  for (int i = 0; i < P; ++i) {
    LearnerConfig cfg;
    cfg.num_states = g.num_states;
    cfg.num_actions = g.num_actions[i];
    cfg.discount = g.discount;
    cfg.theta = setup.theta[i];
    cfg.schedule = setup.schedules[i];
    cfg.q_init = setup.q_init;
    cfg.br_uses_stale_q = setup.br_uses_stale_q;
    learners.emplace_back(cfg, Rng::stream(seed, 1 + i));
  }
  Environment env(g, Rng::stream(seed, 0));

  RunMetrics metrics;
  metrics.seed = seed;
  std::vector<std::int64_t> visits(g.num_states, 0);
  std::vector<int> actions(P);
  std::vector<double> rewards(P);

  int s_prev = env.reset();
  for (int i = 0; i < P; ++i) actions[i] = learners[i].start(s_prev);
  int s_curr = env.step(actions, rewards);

  auto current_profile = [&]() {
    PolicyProfile pi(g.num_states, g.num_actions);
    for (int i = 0; i < P; ++i)
      for (int s = 0; s < g.num_states; ++s)
        pi.set_row(i, s, learners[i].policy_row(s));
    return pi;
  };

  auto record = [&](std::int64_t t) {
    const auto pi = current_profile();
    MetricsRow row;
    row.iterate = t;
    row.nash_gap = nash_gap(g, pi).max_gap;
    for (int i = 0; i < P; ++i) {
      const auto q_exact = q_function(g, pi, i);
      const int A = g.num_actions[i];
      for (int s = 0; s < g.num_states; ++s)
        for (int a = 0; a < A; ++a)
          row.q_tracking_error =
              std::max(row.q_tracking_error,
                       std::abs(learners[i].q_row(s)[a] - q_exact[s * A + a]));
    }
    row.potential_value = potential_value(pg, pi, g.mu);
    row.min_state_visits = *std::min_element(visits.begin(), visits.end());
    metrics.rows.push_back(row);
  };

  std::vector<double> r_prev = rewards;
  for (std::int64_t t = 1; t <= setup.iterations; ++t) {
    ++visits[s_prev];
    for (int i = 0; i < P; ++i)
      actions[i] = learners[i].step(s_curr, r_prev[i]);
    if (t % setup.metrics_cadence == 0 || t == setup.iterations) record(t);
    s_prev = s_curr;
    s_curr = env.step(actions, r_prev);
  }

  metrics.final_policy = current_profile();
  metrics.final_q.resize(P);
  for (int i = 0; i < P; ++i) {
    const int A = g.num_actions[i];
    metrics.final_q[i].resize(static_cast<std::size_t>(g.num_states) * A);
    for (int s = 0; s < g.num_states; ++s)
      for (int a = 0; a < A; ++a)
        metrics.final_q[i][s * A + a] = learners[i].q_row(s)[a];
  }
  return metrics;
}

}  // namespace mpg
