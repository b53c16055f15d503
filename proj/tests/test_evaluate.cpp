#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mpglab/catalog.hpp"
#include "mpglab/evaluate.hpp"

using namespace mpg;

namespace {

// Monte-Carlo estimate of V_i(mu, pi): sample full discounted episodes,
// truncated where the tail is below 1e-9 of the payoff scale.
double rollout_value(const Game& g, const PolicyProfile& pi, int player,
                     int episodes, std::uint64_t seed) {
  Rng rng(seed);
  const int horizon =
      static_cast<int>(std::ceil(std::log(1e-9) / std::log(g.discount)));
  std::vector<int> a(g.num_players);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    int s = rng.categorical(g.mu);
    double acc = 0.0, w = 1.0;
    for (int k = 0; k < horizon; ++k) {
      for (int i = 0; i < g.num_players; ++i)
        a[i] = rng.categorical(pi.row(i, s));
      const std::int64_t j = g.joint_index(a);
      acc += w * g.u(player, s, j);
      w *= g.discount;
      s = rng.categorical(g.transition_row(s, j));
    }
    total += acc;
  }
  return total / episodes;
}

}  // namespace

TEST_CASE("values and Q-values on the common-payoff 2x2 game") {
  const Game g = g2().game;

  SECTION("payoff-2 equilibrium") {
    const auto pi = PolicyProfile::deterministic(g, {{1}, {1}});
    for (int i = 0; i < 2; ++i) {
      const auto v = value_function(g, pi, i);
      REQUIRE(v[0] == Catch::Approx(4.0).margin(1e-12));
      const auto q = q_function(g, pi, i);
      REQUIRE(q[0] == Catch::Approx(2.0).margin(1e-12));  // deviate once
      REQUIRE(q[1] == Catch::Approx(4.0).margin(1e-12));  // stay
      const auto adv = advantage(g, pi, i);
      REQUIRE(adv[0] == Catch::Approx(-2.0).margin(1e-12));
      REQUIRE(adv[1] == Catch::Approx(0.0).margin(1e-12));
    }
    REQUIRE(value_at_dist(g, pi, 0, g.mu) == Catch::Approx(4.0).margin(1e-12));
  }

  SECTION("indifferent mixed profile") {
    PolicyProfile pi = PolicyProfile::uniform(g);
    const double row[] = {2.0 / 3.0, 1.0 / 3.0};
    pi.set_row(0, 0, row);
    pi.set_row(1, 0, row);
    for (int i = 0; i < 2; ++i) {
      const auto v = value_function(g, pi, i);
      REQUIRE(v[0] == Catch::Approx(4.0 / 3.0).margin(1e-12));
      const auto q = q_function(g, pi, i);
      REQUIRE(q[0] == Catch::Approx(4.0 / 3.0).margin(1e-12));
      REQUIRE(q[1] == Catch::Approx(4.0 / 3.0).margin(1e-12));
    }
  }
}

TEST_CASE("exact values match Monte-Carlo rollouts") {
  Rng setup(21);
  const PotentialGame pg = g3();
  PolicyProfile pi = PolicyProfile::uniform(pg.game);
  for (int i = 0; i < 2; ++i)
    for (int s = 0; s < 2; ++s) pi.set_row(i, s, setup.simplex_point(2));
  for (int i = 0; i < 2; ++i) {
    const double exact = value_at_dist(pg.game, pi, i, pg.game.mu);
    const double mc = rollout_value(pg.game, pi, i, 100000, 500 + i);
    REQUIRE(mc == Catch::Approx(exact).margin(0.02));  // ~6 sigma
  }
}

TEST_CASE("one player average of Q under own policy is V") {
  Rng rng(5);
  for (int k = 0; k < 30; ++k) {
    const Game g = random_game(rng, 1 + k % 3, {2, 2, 2}, 0.2 + 0.025 * k);
    PolicyProfile pi = PolicyProfile::uniform(g);
    for (int i = 0; i < 3; ++i)
      for (int s = 0; s < g.num_states; ++s)
        pi.set_row(i, s, rng.simplex_point(2));
    for (int i = 0; i < 3; ++i) {
      const auto v = value_function(g, pi, i);
      const auto q = q_function(g, pi, i);
      const auto adv = advantage(g, pi, i);
      for (int s = 0; s < g.num_states; ++s) {
        double mix = 0.0, amix = 0.0;
        for (int a = 0; a < 2; ++a) {
          mix += pi.at(i, s, a) * q[s * 2 + a];
          amix += pi.at(i, s, a) * adv[s * 2 + a];
        }
        REQUIRE(mix == Catch::Approx(v[s]).margin(1e-10));
        REQUIRE(amix == Catch::Approx(0.0).margin(1e-10));
      }
    }
  }
}

TEST_CASE("discounted visitation") {
  SECTION("closed form on a two-cycle") {
    // Deterministic swap chain, delta = 1/2, start mass on s0: the start
    // state collects the even powers, (1-d) * 1/(1-d^2) = 2/3. The chain is
    // periodic so it would fail validation; evaluation is direct algebra.
    Game g;
    g.num_players = 1;
    g.num_states = 2;
    g.num_actions = {1};
    g.discount = 0.5;
    g.mu = {1.0, 0.0};
    g.payoff = {{0.0, 0.0}};
    g.transition = {0.0, 1.0, 1.0, 0.0};
    detail::fill_names(g);
    const auto d =
        discounted_visitation(g, PolicyProfile::uniform(g), g.mu);
    REQUIRE(d[0] == Catch::Approx(2.0 / 3.0).margin(1e-12));
    REQUIRE(d[1] == Catch::Approx(1.0 / 3.0).margin(1e-12));
  }

  SECTION("matches the truncated series and dominates (1-d) mu") {
    Rng rng(9);
    const Game g = random_game(rng, 3, {2, 2}, 0.8);
    PolicyProfile pi = PolicyProfile::uniform(g);
    for (int i = 0; i < 2; ++i)
      for (int s = 0; s < 3; ++s) pi.set_row(i, s, rng.simplex_point(2));
    const auto d = discounted_visitation(g, pi, g.mu);
    const auto P = policy_transition(g, pi);

    std::vector<double> dist(g.mu.begin(), g.mu.end());
    std::vector<double> series(3, 0.0), nxt(3);
    double w = 1.0 - g.discount;
    for (int k = 0; k <= 120; ++k) {
      for (int s = 0; s < 3; ++s) series[s] += w * dist[s];
      std::fill(nxt.begin(), nxt.end(), 0.0);
      for (int s = 0; s < 3; ++s)
        for (int s2 = 0; s2 < 3; ++s2) nxt[s2] += dist[s] * P[s * 3 + s2];
      dist.swap(nxt);
      w *= g.discount;
    }
    double sum = 0.0;
    for (int s = 0; s < 3; ++s) {
      REQUIRE(d[s] == Catch::Approx(series[s]).margin(1e-10));
      REQUIRE(d[s] >= (1.0 - g.discount) * g.mu[s] - 1e-12);
      sum += d[s];
    }
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("bellman operator") {
  Rng rng(13);
  const Game g = g3().game;
  PolicyProfile pi = PolicyProfile::uniform(g);
  for (int i = 0; i < 2; ++i)
    for (int s = 0; s < 2; ++s) pi.set_row(i, s, rng.simplex_point(2));

  SECTION("exact Q is the fixed point") {
    for (int i = 0; i < 2; ++i) {
      const auto q = q_function(g, pi, i);
      const auto tq = bellman_operator(g, pi, i, q);
      for (std::size_t k = 0; k < q.size(); ++k)
        REQUIRE(tq[k] == Catch::Approx(q[k]).margin(1e-10));
    }
  }

  SECTION("sup-norm contraction with modulus delta") {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> q(4), q2(4);
      for (auto& v : q) v = rng.uniform(-7.0, 7.0);
      for (auto& v : q2) v = rng.uniform(-7.0, 7.0);
      const auto tq = bellman_operator(g, pi, 0, q);
      const auto tq2 = bellman_operator(g, pi, 0, q2);
      double lhs = 0.0, rhs = 0.0;
      for (int k = 0; k < 4; ++k) {
        lhs = std::max(lhs, std::abs(tq[k] - tq2[k]));
        rhs = std::max(rhs, std::abs(q[k] - q2[k]));
      }
      REQUIRE(lhs <= g.discount * rhs + 1e-12);
    }
  }

  SECTION("iterating the operator converges to Q") {
    const auto q = q_function(g, pi, 1);
    std::vector<double> it(4, 0.0);
    for (int k = 0; k < 200; ++k) it = bellman_operator(g, pi, 1, it);
    for (int k = 0; k < 4; ++k)
      REQUIRE(it[k] == Catch::Approx(q[k]).margin(1e-9));
  }
}

TEST_CASE("policy gradient matches finite differences") {
  Rng rng(17);
  const double h = 1e-6;
  const Game g = random_game(rng, 2, {2, 2}, 0.7);
  PolicyProfile pi = PolicyProfile::uniform(g);
  for (int i = 0; i < 2; ++i)
    for (int s = 0; s < 2; ++s) pi.set_row(i, s, rng.simplex_point(2));
  for (int i = 0; i < 2; ++i) {
    const auto grad = policy_gradient(g, pi, i, g.mu);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        PolicyProfile up = pi, dn = pi;
        up.at(i, s, a) += h;  // raw-entry perturbation of the multilinear
        dn.at(i, s, a) -= h;  // extension; no renormalization
        const double fd = (value_at_dist(g, up, i, g.mu) -
                           value_at_dist(g, dn, i, g.mu)) /
                          (2.0 * h);
        const double ref = grad[s * 2 + a];
        REQUIRE(std::abs(ref - fd) <=
                1e-4 * std::max({std::abs(ref), std::abs(fd), 1e-3}));
      }
  }
}

TEST_CASE("policy gradient closed forms") {
  SECTION("single state: gradient = Q / (1 - delta)") {
    const Game g = g2().game;
    PolicyProfile pi = PolicyProfile::uniform(g);
    const auto grad = policy_gradient(g, pi, 0, g.mu);
    const auto q = q_function(g, pi, 0);
    for (int a = 0; a < 2; ++a)
      REQUIRE(grad[a] == Catch::Approx(q[a] / 0.5).margin(1e-12));
  }
  SECTION("zero payoffs: gradient vanishes") {
    Game g = g3().game;
    for (auto& table : g.payoff) std::fill(table.begin(), table.end(), 0.0);
    const auto grad =
        policy_gradient(g, PolicyProfile::uniform(g), 1, g.mu);
    for (double v : grad) REQUIRE(v == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("performance difference identity") {
  const Game g = g2().game;

  SECTION("frozen deviation from the payoff-2 equilibrium") {
    const auto base = PolicyProfile::deterministic(g, {{1}, {1}});
    const auto dev = PolicyProfile::deterministic(g, {{0}, {1}});
    const auto pd = performance_difference(g, dev, base, g.mu);
    REQUIRE(pd.player == 0);
    // Deviating forever earns 0 against the stay-put opponent: 0 - 4.
    REQUIRE(pd.lhs == Catch::Approx(-4.0).margin(1e-12));
    REQUIRE(pd.rhs == Catch::Approx(-4.0).margin(1e-12));
  }

  SECTION("identical profiles give (0, 0) and no deviator") {
    const auto pi = PolicyProfile::uniform(g);
    const auto pd = performance_difference(g, pi, pi, g.mu);
    REQUIRE(pd.player == -1);
    REQUIRE(pd.lhs == 0.0);
    REQUIRE(pd.rhs == 0.0);
  }

  SECTION("two deviators rejected") {
    const auto pi = PolicyProfile::deterministic(g, {{0}, {0}});
    const auto both = PolicyProfile::deterministic(g, {{1}, {1}});
    REQUIRE_THROWS_AS(performance_difference(g, pi, both, g.mu),
                      DeviatorMismatch);
  }

  SECTION("random unilateral deviations, both sides agree") {
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
      const Game rg = random_game(rng, 2, {2, 3}, 0.2 + 0.018 * trial);
      PolicyProfile pi = PolicyProfile::uniform(rg);
      for (int i = 0; i < 2; ++i)
        for (int s = 0; s < 2; ++s)
          pi.set_row(i, s, rng.simplex_point(rg.num_actions[i]));
      PolicyProfile dev = pi;
      const int i = trial % 2;
      for (int s = 0; s < 2; ++s)
        dev.set_row(i, s, rng.simplex_point(rg.num_actions[i]));
      const auto pd = performance_difference(rg, dev, pi, rg.mu);
      REQUIRE(pd.player == i);
      REQUIRE(std::abs(pd.lhs - pd.rhs) <= 1e-8);
    }
  }
}
