#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mpglab/catalog.hpp"
#include "mpglab/evaluate.hpp"
#include "mpglab/linalg.hpp"
#include "mpglab/oracle.hpp"

using namespace mpg;

namespace {

// Independent optimal-value oracle: Howard policy iteration on the induced
// single-agent MDP, each evaluation an exact linear solve.
std::vector<double> policy_iteration_values(const Game& g,
                                            const PolicyProfile& pi,
                                            int player) {
  const InducedMdp m = induced_mdp(g, pi, player);
  const int S = m.num_states, A = m.num_actions;
  std::vector<int> act(S, 0);
  std::vector<double> v(S, 0.0);
  for (int round = 0; round < 200; ++round) {
    std::vector<double> lhs(static_cast<std::size_t>(S) * S), rhs(S);
    for (int s = 0; s < S; ++s) {
      const std::size_t sa = static_cast<std::size_t>(s) * A + act[s];
      rhs[s] = m.reward[sa];
      for (int s2 = 0; s2 < S; ++s2)
        lhs[s * S + s2] =
            (s == s2 ? 1.0 : 0.0) - g.discount * m.trans[sa * S + s2];
    }
    v = solve_certified(lhs, rhs);
    bool stable = true;
    for (int s = 0; s < S; ++s) {
      int best = act[s];
      double best_q = -1e300;
      for (int a = 0; a < A; ++a) {
        const std::size_t sa = static_cast<std::size_t>(s) * A + a;
        double q = m.reward[sa];
        for (int s2 = 0; s2 < S; ++s2)
          q += g.discount * m.trans[sa * S + s2] * v[s2];
        if (q > best_q + 1e-12) {
          best_q = q;
          best = a;
        }
      }
      if (best != act[s]) stable = false;
      act[s] = best;
    }
    if (stable) return v;
  }
  return v;
}

}  // namespace

TEST_CASE("best response on the common-payoff 2x2 game") {
  const Game g = g2().game;
  SECTION("against the payoff-2 action") {
    const auto pi = PolicyProfile::deterministic(g, {{0}, {1}});
    const BestResponse br = best_response(g, pi, 0);
    REQUIRE(br.action[0] == 1);
    REQUIRE(br.value[0] == Catch::Approx(4.0).margin(1e-9));
  }
  SECTION("zero payoffs pick the lexicographic action") {
    Game zero = g;
    std::fill(zero.payoff[0].begin(), zero.payoff[0].end(), 0.0);
    const BestResponse br =
        best_response(zero, PolicyProfile::uniform(zero), 0);
    REQUIRE(br.action[0] == 0);
    REQUIRE(br.value[0] == Catch::Approx(0.0).margin(1e-9));
  }
}

TEST_CASE("best response matches policy iteration") {
  Rng rng(53);
  for (int trial = 0; trial < 25; ++trial) {
    const Game g =
        random_game(rng, 2 + trial % 2, {2, 3}, 0.3 + 0.025 * trial);
    PolicyProfile pi = PolicyProfile::uniform(g);
    for (int i = 0; i < 2; ++i)
      for (int s = 0; s < g.num_states; ++s)
        pi.set_row(i, s, rng.simplex_point(g.num_actions[i]));
    for (int i = 0; i < 2; ++i) {
      const BestResponse br = best_response(g, pi, i);
      const auto ref = policy_iteration_values(g, pi, i);
      for (int s = 0; s < g.num_states; ++s)
        REQUIRE(br.value[s] == Catch::Approx(ref[s]).margin(1e-9));
    }
  }
}

TEST_CASE("best response dominates every evaluated policy") {
  Rng rng(59);
  const Game g = random_game(rng, 3, {2, 2}, 0.85);
  PolicyProfile pi = PolicyProfile::uniform(g);
  for (int i = 0; i < 2; ++i)
    for (int s = 0; s < 3; ++s) pi.set_row(i, s, rng.simplex_point(2));
  const BestResponse br = best_response(g, pi, 0);
  const auto own = value_function(g, pi, 0);
  for (int s = 0; s < 3; ++s) REQUIRE(br.value[s] >= own[s] - 1e-9);
}

TEST_CASE("nash gap report") {
  const Game g = g2().game;
  SECTION("equilibria certify") {
    for (int a : {0, 1}) {
      const auto pi = PolicyProfile::deterministic(g, {{a}, {a}});
      const NashReport rep = nash_gap(g, pi);
      REQUIRE(rep.max_gap <= 1e-9);
      REQUIRE(rep.certified);
    }
  }
  SECTION("mismatched profile: frozen per-player gaps") {
    const auto pi = PolicyProfile::deterministic(g, {{0}, {1}});
    const NashReport rep = nash_gap(g, pi);
    REQUIRE(rep.gap[0][0] == Catch::Approx(4.0).margin(1e-9));
    REQUIRE(rep.gap[1][0] == Catch::Approx(2.0).margin(1e-9));
    REQUIRE(rep.max_gap == Catch::Approx(4.0).margin(1e-9));
    REQUIRE_FALSE(rep.certified);
  }
  SECTION("mixed equilibrium certifies") {
    PolicyProfile pi = PolicyProfile::uniform(g);
    const double row[] = {2.0 / 3.0, 1.0 / 3.0};
    pi.set_row(0, 0, row);
    pi.set_row(1, 0, row);
    REQUIRE(nash_gap(g, pi).max_gap <= 1e-9);
  }
  SECTION("entries never materially negative") {
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
      const Game rg = random_game(rng, 2, {2, 2}, 0.6);
      PolicyProfile pi = PolicyProfile::uniform(rg);
      for (int i = 0; i < 2; ++i)
        for (int s = 0; s < 2; ++s) pi.set_row(i, s, rng.simplex_point(2));
      const NashReport rep = nash_gap(rg, pi);
      for (const auto& per_state : rep.gap)
        for (double v : per_state) REQUIRE(v >= -1e-9);
    }
  }
}

TEST_CASE("best-response fixed-point check") {
  const Game g = g2().game;
  SECTION("indifferent mixed profile passes") {
    PolicyProfile pi = PolicyProfile::uniform(g);
    const double row[] = {2.0 / 3.0, 1.0 / 3.0};
    pi.set_row(0, 0, row);
    pi.set_row(1, 0, row);
    REQUIRE(br_fixed_point_check(g, pi).passed);
  }
  SECTION("mismatched profile fails at the first player") {
    const auto pi = PolicyProfile::deterministic(g, {{0}, {1}});
    const auto rep = br_fixed_point_check(g, pi);
    REQUIRE_FALSE(rep.passed);
    REQUIRE_FALSE(rep.violations.empty());
    REQUIRE(rep.violations.front().player == 0);
  }
  SECTION("single-action game passes") {
    REQUIRE(br_fixed_point_check(g1().game,
                                 PolicyProfile::uniform(g1().game))
                .passed);
  }
}

TEST_CASE("fixed-point check agrees with certification") {
  Rng rng(67);
  std::vector<Game> games;
  games.push_back(g2().game);
  for (int k = 0; k < 6; ++k) games.push_back(team_2x2x2(100 + k).game);
  for (const auto& g : games) {
    std::vector<std::vector<int>> choice(2, std::vector<int>(g.num_states));
    const int total = 1 << (2 * g.num_states);
    for (int mask = 0; mask < total; ++mask) {
      for (int i = 0, bit = 0; i < 2; ++i)
        for (int s = 0; s < g.num_states; ++s, ++bit)
          choice[i][s] = (mask >> bit) & 1;
      const auto pi = PolicyProfile::deterministic(g, choice);
      REQUIRE(nash_gap(g, pi, 1e-6).certified ==
              br_fixed_point_check(g, pi, 1e-6).passed);
    }
  }
}

TEST_CASE("deterministic Nash enumeration") {
  SECTION("common-payoff 2x2 has the two symmetric equilibria") {
    const auto found = enumerate_nash_deterministic(g2().game);
    REQUIRE(found.size() == 2);
    REQUIRE(found[0].at(0, 0, 0) == 1.0);
    REQUIRE(found[0].at(1, 0, 0) == 1.0);
    REQUIRE(found[1].at(0, 0, 1) == 1.0);
    REQUIRE(found[1].at(1, 0, 1) == 1.0);
  }
  SECTION("general-sum single-state game") {
    const auto found = enumerate_nash_deterministic(g4().game);
    REQUIRE(found.size() == 2);
    REQUIRE(found[0].at(0, 0, 0) == 1.0);
    REQUIRE(found[1].at(0, 0, 1) == 1.0);
  }
  SECTION("unique strict team optimum is the only equilibrium") {
    // u(a0,a0)=3, u(a0,a1)=2, u(a1,a0)=0, u(a1,a1)=1: the off-diagonal
    // payoffs break the second diagonal profile's equilibrium property.
    const PotentialGame pg =
        make_single_state_potential({2, 2}, {3.0, 2.0, 0.0, 1.0}, {}, 0.5);
    const auto team = make_team_game(pg.game);
    const auto found = enumerate_nash_deterministic(team.game);
    REQUIRE(found.size() == 1);
    REQUIRE(found[0].at(0, 0, 0) == 1.0);
    REQUIRE(found[0].at(1, 0, 0) == 1.0);
    const auto m = potential_maximum(team, team.game.mu);
    REQUIRE(lyapunov_gap(team, found[0], team.game.mu) ==
            Catch::Approx(0.0).margin(1e-12));
    REQUIRE(m.value == Catch::Approx(6.0).margin(1e-12));
  }
  SECTION("1-player MDP enumeration returns the optimal policies") {
    Rng rng(71);
    const Game g = random_game(rng, 2, {3}, 0.7);
    const auto found = enumerate_nash_deterministic(g);
    REQUIRE_FALSE(found.empty());
    const BestResponse opt = best_response(g, PolicyProfile::uniform(g), 0);
    for (const auto& pi : found) {
      const auto v = value_function(g, pi, 0);
      for (int s = 0; s < 2; ++s)
        REQUIRE(v[s] == Catch::Approx(opt.value[s]).margin(1e-6));
    }
  }
  SECTION("size guard") {
    Rng rng(73);
    const Game big = random_game(rng, 11, {2, 2}, 0.5);
    REQUIRE_THROWS_AS(enumerate_nash_deterministic(big),
                      EnumerationTooLarge);
  }
}
