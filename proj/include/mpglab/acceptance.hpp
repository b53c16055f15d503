#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mpglab/catalog.hpp"
#include "mpglab/evaluate.hpp"
#include "mpglab/flow.hpp"
#include "mpglab/io.hpp"
#include "mpglab/learner.hpp"
#include "mpglab/oracle.hpp"
#include "mpglab/potential.hpp"

namespace mpg {

struct CriterionResult {
  int index = 0;
  std::string name;
  std::string target;
  std::string measured;
  bool passed = false;
  double seconds = 0.0;
};

struct AcceptanceReport {
  std::vector<CriterionResult> results;
  bool all_passed() const {
    for (const auto& r : results)
      if (!r.passed) return false;
    return !results.empty();
  }
};

struct AcceptanceOptions {
  std::string out_dir = "accept_out";  // learning-run CSVs land here
  int jobs = 0;                        // 0 selects hardware concurrency
};

namespace detail {

inline constexpr std::uint64_t kAcceptanceSeed = 0x0acce597;

inline std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

inline PolicyProfile random_profile(const Game& g, Rng& rng) {
  PolicyProfile pi(g.num_states, g.num_actions);
  for (int i = 0; i < g.num_players; ++i)
    for (int s = 0; s < g.num_states; ++s)
      pi.set_row(i, s, rng.simplex_point(g.num_actions[i]));
  return pi;
}

// Cycles through game shapes so the property criteria also cover the
// single-state and three-player corners.
inline Game random_eval_game(Rng& rng, int trial) {
  const double discount = rng.uniform(0.1, 0.9);  // drawn before the shapes
  switch (trial % 4) {
    case 0:
      return random_game(rng, 1, {2, 2}, discount);
    case 1:
      return random_game(rng, 2, {2, 2}, discount);
    case 2:
      return random_game(rng, 2, {2, 3}, discount);
    default:
      return random_game(rng, 2, {2, 2, 2}, discount);
  }
}

inline std::vector<PolicyProfile> all_deterministic_profiles(const Game& g) {
  std::vector<std::vector<int>> choice(
      g.num_players, std::vector<int>(g.num_states, 0));
  std::vector<PolicyProfile> out;
  for (;;) {
    out.push_back(PolicyProfile::deterministic(g, choice));
    int i = 0, s = 0;
    for (;;) {  // odometer over (player, state) slots
      if (++choice[i][s] < g.num_actions[i]) break;
      choice[i][s] = 0;
      if (++s == g.num_states) {
        s = 0;
        if (++i == g.num_players) return out;
      }
    }
  }
}

// Runs one seed batch of the learning dynamics, multi-threaded over seeds.
inline std::vector<RunMetrics> run_batch(const PotentialGame& pg,
                                         const DynamicsSetup& setup,
                                         const std::vector<std::uint64_t>& seeds,
                                         int jobs) {
  const int n = static_cast<int>(seeds.size());
  std::vector<RunMetrics> runs(n);
  std::vector<std::string> failures(n);
  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (int k = next.fetch_add(1); k < n; k = next.fetch_add(1)) {
      try {
        runs[k] = run_dynamics(pg, setup, seeds[k]);
      } catch (const std::exception& e) {
        failures[k] = e.what();
      }
    }
  };
  if (jobs < 1) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  if (jobs > n) jobs = n;
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (int k = 0; k < n; ++k)
    if (!failures[k].empty())
      throw Error("seed " + std::to_string(seeds[k]) +
                  " failed: " + failures[k]);
  return runs;
}

struct BatchScores {
  int tracking_pass = 0;  // final err <= 0.1 and last-25% below 0.2
  int nash_pass = 0;      // final nash_gap <= 0.05
  double worst_final_tracking = 0.0;
  double worst_final_gap = 0.0;
};

inline BatchScores score_batch(const std::vector<RunMetrics>& runs,
                               std::int64_t iterations) {
  BatchScores sc;
  const std::int64_t tail_start = (3 * iterations) / 4;
  for (const auto& run : runs) {
    const MetricsRow& last = run.rows.back();
    bool tail_ok = true;
    for (const auto& row : run.rows)
      if (row.iterate >= tail_start && row.q_tracking_error >= 0.2)
        tail_ok = false;
    if (last.q_tracking_error <= 0.1 && tail_ok) ++sc.tracking_pass;
    if (last.nash_gap <= 0.05) ++sc.nash_pass;
    sc.worst_final_tracking =
        std::max(sc.worst_final_tracking, last.q_tracking_error);
    sc.worst_final_gap = std::max(sc.worst_final_gap, last.nash_gap);
  }
  return sc;
}

}  // namespace detail

// Executes all eleven acceptance criteria, streaming one table row per
// criterion to `out`, and returns the collected results. Learning-run CSVs
// are written under opt.out_dir so failures can be inspected afterwards.
inline AcceptanceReport run_acceptance_suite(std::ostream& out,
                                             const AcceptanceOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  AcceptanceReport report;

  const auto pad = [](std::string text, std::size_t width) {
    text += "  ";
    if (text.size() < width) text.resize(width, ' ');
    return text;
  };
  const auto emit = [&](CriterionResult r) {
    out << ' ' << std::setw(2) << r.index << "  " << pad(r.name, 24)
        << pad(r.target, 42) << pad(r.measured, 46)
        << (r.passed ? "PASS" : "FAIL") << "  ("
        << detail::fmt(r.seconds, 2) << " s)\n"
        << std::flush;
    report.results.push_back(std::move(r));
  };
  const auto timed = [&](int index, const std::string& name,
                         const std::string& target, auto&& body) {
    CriterionResult r;
    r.index = index;
    r.name = name;
    r.target = target;
    const auto t0 = clock::now();
    body(r);
    r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    emit(std::move(r));
  };

  out << "  #  criterion               target                                    "
         "measured                                      result\n";

  // 1. One-step lookahead operator is a discount-factor contraction.
  timed(1, "bellman_contraction", "0 violations in 1000 trials", [&](CriterionResult& r) {
    Rng rng = Rng::stream(detail::kAcceptanceSeed, 1);
    int violations = 0;
    double max_excess = -1.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const double discount = rng.uniform(0.1, 0.9);
      const Game g = random_game(rng, 2, {2, 2}, discount);
      const PolicyProfile pi = detail::random_profile(g, rng);
      const int i = trial % 2;
      const int dim = g.num_states * g.num_actions[i];
      std::vector<double> q(dim), q2(dim);
      for (auto& v : q) v = rng.uniform(-5.0, 5.0);
      for (auto& v : q2) v = rng.uniform(-5.0, 5.0);
      const auto tq = bellman_operator(g, pi, i, q);
      const auto tq2 = bellman_operator(g, pi, i, q2);
      double lhs = 0.0, rhs = 0.0;
      for (int k = 0; k < dim; ++k) {
        lhs = std::max(lhs, std::abs(tq[k] - tq2[k]));
        rhs = std::max(rhs, std::abs(q[k] - q2[k]));
      }
      max_excess = std::max(max_excess, lhs - g.discount * rhs);
      if (lhs > g.discount * rhs + 1e-12) ++violations;
    }
    r.measured = std::to_string(violations) +
                 " violations, max slack " + detail::fmt(max_excess, 2);
    r.passed = violations == 0;
  });

  // 2. Q averaged under the own policy reproduces V.
  timed(2, "value_q_consistency", "max |sum pi*Q - V| <= 1e-10, 200 games",
        [&](CriterionResult& r) {
          Rng rng = Rng::stream(detail::kAcceptanceSeed, 2);
          double worst = 0.0;
          for (int trial = 0; trial < 200; ++trial) {
            const Game g = detail::random_eval_game(rng, trial);
            const PolicyProfile pi = detail::random_profile(g, rng);
            for (int i = 0; i < g.num_players; ++i) {
              const auto v = value_function(g, pi, i);
              const auto q = q_function(g, pi, i);
              for (int s = 0; s < g.num_states; ++s) {
                double mix = 0.0;
                for (int a = 0; a < g.num_actions[i]; ++a)
                  mix += pi.at(i, s, a) * q[s * g.num_actions[i] + a];
                worst = std::max(worst, std::abs(mix - v[s]));
              }
            }
          }
          r.measured = "max deviation " + detail::fmt(worst, 2);
          r.passed = worst <= 1e-10;
        });

  // 3. Analytic policy gradient against central finite differences.
  timed(3, "policy_gradient_fd", "rel err <= 1e-4, 20 games x all coords",
        [&](CriterionResult& r) {
          Rng rng = Rng::stream(detail::kAcceptanceSeed, 3);
          const double h = 1e-6;
          double worst = 0.0;
          int coords = 0;
          for (int trial = 0; trial < 20; ++trial) {
            const Game g = detail::random_eval_game(rng, trial % 3);
            const PolicyProfile pi = detail::random_profile(g, rng);
            for (int i = 0; i < g.num_players; ++i) {
              const auto grad = policy_gradient(g, pi, i, g.mu);
              for (int s = 0; s < g.num_states; ++s)
                for (int a = 0; a < g.num_actions[i]; ++a, ++coords) {
                  PolicyProfile up = pi, dn = pi;
                  up.at(i, s, a) += h;   // multilinear extension:
                  dn.at(i, s, a) -= h;   // rows deliberately not renormalized
                  const double fd =
                      (value_at_dist(g, up, i, g.mu) -
                       value_at_dist(g, dn, i, g.mu)) /
                      (2.0 * h);
                  const double ref = grad[s * g.num_actions[i] + a];
                  const double rel = std::abs(ref - fd) /
                                     std::max({std::abs(ref), std::abs(fd), 1e-3});
                  worst = std::max(worst, rel);
                }
            }
          }
          r.measured = "max rel err " + detail::fmt(worst, 2) + " over " +
                       std::to_string(coords) + " coords";
          r.passed = worst <= 1e-4;
        });

  // 4. Performance-difference identity on unilateral deviations.
  timed(4, "performance_difference", "|lhs - rhs| <= 1e-8, 200 deviations",
        [&](CriterionResult& r) {
          Rng rng = Rng::stream(detail::kAcceptanceSeed, 4);
          double worst = 0.0;
          for (int trial = 0; trial < 200; ++trial) {
            const Game g = detail::random_eval_game(rng, trial);
            const PolicyProfile pi = detail::random_profile(g, rng);
            PolicyProfile dev = pi;
            const int i = trial % g.num_players;
            for (int s = 0; s < g.num_states; ++s)
              dev.set_row(i, s, rng.simplex_point(g.num_actions[i]));
            const auto pd = performance_difference(g, pi, dev, g.mu);
            worst = std::max(worst, std::abs(pd.lhs - pd.rhs));
          }
          r.measured = "max |lhs - rhs| " + detail::fmt(worst, 2);
          r.passed = worst <= 1e-8;
        });

  // 5. Nash certification and best-response fixed-point agree.
  timed(5, "nash_br_equivalence", "100% agreement on deterministic profiles",
        [&](CriterionResult& r) {
          std::vector<Game> games{g2().game};
          for (std::uint64_t seed = 1; seed <= 10; ++seed)
            games.push_back(team_2x2x2(seed).game);
          int cases = 0, agree = 0;
          for (const auto& g : games)
            for (const auto& pi : detail::all_deterministic_profiles(g)) {
              const NashReport nr = nash_gap(g, pi, 1e-6);
              const BrFixedPointReport fp = br_fixed_point_check(g, pi, 1e-6);
              ++cases;
              if (nr.certified == fp.passed) ++agree;
            }
          r.measured = std::to_string(agree) + "/" + std::to_string(cases) +
                       " agree";
          r.passed = agree == cases;
        });

  // 6 + 7 + 11 share the learning batches: run G2 and G3 once, score both
  // criteria, then rerun both batches and require byte-identical CSVs.
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  DynamicsSetup setup;
  setup.theta = {0.05, 0.05};
  setup.schedules = {StepSchedule{}, StepSchedule{}};
  const struct {
    const char* name;
    PotentialGame pg;
  } learn_games[] = {{"G2", g2()}, {"G3", g3()}};

  std::vector<std::vector<RunMetrics>> first_runs;
  std::vector<detail::BatchScores> scores;
  double batch_seconds = 0.0;
  {
    const auto t0 = clock::now();
    for (const auto& lg : learn_games) {
      auto runs = detail::run_batch(lg.pg, setup, seeds, opt.jobs);
      scores.push_back(detail::score_batch(runs, setup.iterations));
      const auto dir = std::filesystem::path(opt.out_dir) / lg.name;
      std::filesystem::create_directories(dir);
      for (const auto& run : runs) {
        std::ofstream f(dir / ("seed_" + std::to_string(run.seed) + ".csv"));
        write_metrics_csv(f, run);
      }
      first_runs.push_back(std::move(runs));
    }
    batch_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  }

  {
    CriterionResult r;
    r.index = 6;
    r.name = "q_tracking";
    r.target = "final <= 0.1, tail < 0.2, >= 9/10 seeds";
    r.measured = "G2 " + std::to_string(scores[0].tracking_pass) + "/10 (worst " +
                 detail::fmt(scores[0].worst_final_tracking) + "), G3 " +
                 std::to_string(scores[1].tracking_pass) + "/10 (worst " +
                 detail::fmt(scores[1].worst_final_tracking) + ")";
    r.passed = scores[0].tracking_pass >= 9 && scores[1].tracking_pass >= 9;
    r.seconds = batch_seconds;
    emit(std::move(r));
  }
  {
    CriterionResult r;
    r.index = 7;
    r.name = "nash_convergence";
    r.target = "final nash_gap <= 0.05, >= 9/10 seeds";
    r.measured = "G2 " + std::to_string(scores[0].nash_pass) + "/10 (worst " +
                 detail::fmt(scores[0].worst_final_gap) + "), G3 " +
                 std::to_string(scores[1].nash_pass) + "/10 (worst " +
                 detail::fmt(scores[1].worst_final_gap) + ")";
    r.passed = scores[0].nash_pass >= 9 && scores[1].nash_pass >= 9;
    r.seconds = 0.0;  // shares criterion 6's batch
    emit(std::move(r));
  }

  // 8. Flow trajectories: potential gap decreases, equilibrium reached.
  timed(8, "lyapunov_flow", "0 rises off switches; final phi,gap <= 1e-3",
        [&](CriterionResult& r) {
          const struct {
            const char* name;
            PotentialGame pg;
          } flow_games[] = {{"G2", g2()}, {"G3", g3()}, {"G4", g4()}};
          FlowConfig fc;
          fc.dt = 0.01;
          fc.horizon = 50.0;
          bool ok = true;
          std::string measured;
          for (const auto& fg : flow_games) {
            const auto traj = integrate_flow(
                fg.pg, PolicyProfile::uniform(fg.pg.game), fc);
            const auto rep = lyapunov_monotonicity_report(traj, 1e-6 * fc.dt);
            const auto& last = traj.points.back();
            const bool game_ok =
                rep.passed && last.phi <= 1e-3 && last.nash_gap <= 1e-3;
            ok = ok && game_ok;
            if (!measured.empty()) measured += "; ";
            measured += std::string(fg.name) + " viol " +
                        std::to_string(rep.violations) + " phi " +
                        detail::fmt(last.phi, 2) + " gap " +
                        detail::fmt(last.nash_gap, 2);
          }
          r.measured = measured;
          r.passed = ok;
        });

  // 9. Potential-game certificate holds on the library, fails on GZ.
  timed(9, "mpg_verification", "G2/G3/G4 <= 1e-8; GZ rejected",
        [&](CriterionResult& r) {
          const MpgReport r2 = verify_mpg(g2());
          const MpgReport r3 = verify_mpg(g3());
          const MpgReport r4 = verify_mpg(g4());
          const MpgReport rz = verify_mpg(gz());
          r.measured = "G2 " + detail::fmt(r2.max_violation, 2) + ", G3 " +
                       detail::fmt(r3.max_violation, 2) + ", G4 " +
                       detail::fmt(r4.max_violation, 2) + ", GZ " +
                       detail::fmt(rz.max_violation, 2);
          r.passed = r2.passed && r3.passed && r4.passed && !rz.passed;
        });

  // 10. Step-size validator accepts the defaults, rejects each broken form
  // with its designated error kind.
  timed(10, "schedule_validation", "accepts (0.6,0.85); typed rejections",
        [&](CriterionResult& r) {
          int ok = 0;
          try {
            validate_schedule(StepSchedule{1.0, 0.6, 1.0, 0.85});
            ++ok;
          } catch (const Error&) {
          }
          try {
            validate_schedule(StepSchedule{1.0, 0.5, 1.0, 0.85});
          } catch (const SummabilityError&) {
            ++ok;
          } catch (const Error&) {
          }
          try {
            validate_schedule(StepSchedule{1.0, 0.7, 1.0, 0.7});
          } catch (const TimescaleError&) {
            ++ok;
          } catch (const Error&) {
          }
          try {
            validate_schedule(StepSchedule{1.0, 0.6, 1.0, 1.1});
          } catch (const DivergenceError&) {
            ++ok;
          } catch (const Error&) {
          }
          r.measured = std::to_string(ok) + "/4 behaviors correct";
          r.passed = ok == 4;
        });

  // 11. Rerunning the learning batches reproduces every CSV byte for byte.
  timed(11, "determinism", "byte-identical CSVs on rerun",
        [&](CriterionResult& r) {
          int mismatches = 0, files = 0;
          for (std::size_t gi = 0; gi < 2; ++gi) {
            const auto rerun =
                detail::run_batch(learn_games[gi].pg, setup, seeds, opt.jobs);
            for (std::size_t k = 0; k < rerun.size(); ++k, ++files) {
              std::ostringstream a, b;
              write_metrics_csv(a, first_runs[gi][k]);
              write_metrics_csv(b, rerun[k]);
              if (a.str() != b.str()) ++mismatches;
            }
          }
          r.measured = std::to_string(files - mismatches) + "/" +
                       std::to_string(files) + " files identical";
          r.passed = mismatches == 0;
        });

  out << (report.all_passed() ? "ALL CRITERIA PASSED\n"
                              : "CRITERIA FAILED\n");
  return report;
}

}  // namespace mpg
