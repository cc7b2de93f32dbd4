#include <gtest/gtest.h>

#include <cmath>

#include "mospi/envs.hpp"
#include "mospi/error.hpp"
#include "mospi/io.hpp"
#include "mospi/stats.hpp"
#include "support/oracles.hpp"

using namespace mospi;
using namespace mospi::envs;

TEST(Gridworld, DeterministicUnderSeed) {
  GridworldConfig cfg;
  cfg.size = 5;
  cfg.seed = 42;
  EXPECT_EQ(io::to_json(gen_gridworld(cfg).spec.mdp).dump(), io::to_json(gen_gridworld(cfg).spec.mdp).dump());
  cfg.seed = 43;
  GridworldConfig other = cfg;
  other.seed = 42;
  EXPECT_NE(io::to_json(gen_gridworld(cfg).spec.mdp).dump(), io::to_json(gen_gridworld(other).spec.mdp).dump());
}

TEST(Gridworld, NoPitsMeansZeroPitRewards) {
  GridworldConfig cfg;
  cfg.size = 6;
  cfg.eta_pit = 0.0;
  cfg.d_pits = 2;
  const Gridworld w = gen_gridworld(cfg);
  const TabularMdp& m = w.spec.mdp;
  for (int k = 1; k < m.d; ++k)
    for (int x = 0; x < m.n_states; ++x)
      for (int a = 0; a < m.n_actions; ++a) ASSERT_EQ(m.reward(k, x, a), 0.0);
}

TEST(Gridworld, Layout) {
  GridworldConfig cfg;
  cfg.size = 4;
  cfg.eta_pit = 0.5;
  cfg.seed = 3;
  const Gridworld w = gen_gridworld(cfg);
  const TabularMdp& m = w.spec.mdp;
  EXPECT_EQ(w.start, 15);
  EXPECT_EQ(w.goal, 0);
  EXPECT_EQ(w.terminal, 16);
  EXPECT_EQ(m.n_states, 17);
  EXPECT_EQ(m.n_actions, kNumMoves);
  EXPECT_EQ(m.x0, w.start);
  EXPECT_NO_THROW(m.validate());
  EXPECT_FALSE(w.pits[0][w.start]);
  EXPECT_FALSE(w.pits[0][w.goal]);
  // Off-grid moves from the bottom-right corner stay put.
  EXPECT_EQ(m.prob(w.start, kDown, w.start), 1.0);
  EXPECT_EQ(m.prob(w.start, kRight, w.start), 1.0);
  // An on-grid move succeeds with some probability and otherwise stays.
  EXPECT_NEAR(m.prob(w.start, kUp, w.start) + m.prob(w.start, kUp, w.start - 4), 1.0, 1e-15);
  for (int a = 0; a < kNumMoves; ++a) {
    EXPECT_EQ(m.prob(w.goal, a, w.terminal), 1.0);
    EXPECT_EQ(m.reward(0, w.goal, a), cfg.goal_reward);
  }
  EXPECT_EQ(w.spec.sense, ConstraintSense::kAtLeast);
  EXPECT_EQ(w.spec.thresholds, std::vector<double>{-2.0});
}

TEST(Gridworld, DefaultConfigIsSolvable) {
  int feasible = 0, regenerations = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GridworldConfig cfg;
    cfg.seed = seed;
    const SolvedGridworld sw = gen_solved_gridworld(cfg, 1000);
    regenerations += sw.regenerations;
    feasible += sw.regenerations == 0 ? 1 : 0;
    const auto j = returns(sw.world.spec.mdp, sw.pi_star);
    ASSERT_GE(j[1], cfg.threshold - 1e-6);
  }
  EXPECT_GE(feasible, 95);
  RecordProperty("regenerations", regenerations);
}

TEST(MixPolicy, Examples) {
  Policy a = Policy::uniform(2, 2), b = Policy::uniform(2, 2);
  a(0, 0) = 1.0, a(0, 1) = 0.0;
  EXPECT_EQ(mix_policy(a, b, 1.0), a);
  EXPECT_EQ(mix_policy(a, b, 0.0), b);
  const Policy m = mix_policy(a, b, 0.4);
  EXPECT_NEAR(m(0, 0), 0.7, 1e-15);
  EXPECT_NEAR(m(0, 1), 0.3, 1e-15);
  EXPECT_THROW(mix_policy(a, b, 1.5), InvalidInput);
}

TEST(Rollout, TerminalStartIsAnError) {
  TabularMdp m = TabularMdp::self_loops(2, 1, 1, 0.9);
  m.terminal = {0};
  EXPECT_THROW(rollout(m, Policy::uniform(2, 1), {1, 10, 0, 1}), InvalidInput);
}

TEST(Rollout, DeterministicChainGivesIdenticalTrajectories) {
  TabularMdp m = TabularMdp::self_loops(3, 2, 1, 0.9);
  m.terminal = {2};
  m.prob(0, 1, 0) = 0.0, m.prob(0, 1, 1) = 1.0;
  m.prob(1, 1, 1) = 0.0, m.prob(1, 1, 2) = 1.0;
  const int act[] = {1, 1, 0};
  const Dataset ds = rollout(m, Policy::deterministic(act, 2), {20, 10, 4, 1});
  ASSERT_EQ(ds.size(), 20u);
  for (const auto& t : ds.trajectories) {
    ASSERT_EQ(t.steps.size(), 2u);
    EXPECT_EQ(t.steps[0].x_next, 1);
    EXPECT_EQ(t.steps[1].x_next, 2);
  }
}

TEST(Rollout, IndependentOfThreadCount) {
  GridworldConfig cfg;
  cfg.size = 4;
  const Gridworld w = gen_gridworld(cfg);
  const Policy pi = Policy::uniform(w.spec.mdp.n_states, 4);
  const Dataset a = rollout(w.spec.mdp, pi, {50, 40, 9, 1}), b = rollout(w.spec.mdp, pi, {50, 40, 9, 3});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a.trajectories[i].steps.size(), b.trajectories[i].steps.size());
    for (std::size_t t = 0; t < a.trajectories[i].steps.size(); ++t) {
      ASSERT_EQ(a.trajectories[i].steps[t].x, b.trajectories[i].steps[t].x);
      ASSERT_EQ(a.trajectories[i].steps[t].a, b.trajectories[i].steps[t].a);
    }
  }
}

TEST(Rollout, MonteCarloMatchesExactReturn) {
  GridworldConfig cfg;
  cfg.size = 3;
  cfg.seed = 5;
  const Gridworld w = gen_gridworld(cfg);
  const TabularMdp& m = w.spec.mdp;
  const Policy pi = Policy::uniform(m.n_states, 4);
  const int n = 100000;
  const Dataset ds = rollout(m, pi, {n, 4000, 77, 1});
  const auto j = returns(m, pi);
  for (int k = 0; k < m.d; ++k) {
    const auto g = ope::discounted_returns(ds, k, m.gamma[k]);
    const double se = stats::sample_stddev(g) / std::sqrt(static_cast<double>(n));
    EXPECT_LE(std::abs(stats::mean(g) - j[k]), 3.0 * se) << "k=" << k;
  }
}

// Property suites.

TEST(EnvProperties, GeneratedModelsAndRolloutsAreConsistent) {
  Rng rng(7001);
  for (int trial = 0; trial < 1000; ++trial) {
    GridworldConfig cfg;
    cfg.size = 2 + static_cast<int>(rng.index(4));
    cfg.eta_pit = 0.9 * rng.uniform();
    cfg.d_pits = 1 + static_cast<int>(rng.index(3));
    cfg.seed = rng.index(1u << 30);
    const Gridworld w = gen_gridworld(cfg);
    const TabularMdp& m = w.spec.mdp;
    ASSERT_NO_THROW(m.validate());
    const Policy pi = oracle::random_policy(rng, m.n_states, 4, 0.2);
    const int n = 1 + static_cast<int>(rng.index(5));
    const Dataset ds = rollout(m, pi, {n, 30, rng.index(1u << 30), 1});
    ASSERT_EQ(static_cast<int>(ds.size()), n);
    for (const auto& t : ds.trajectories) {
      ASSERT_FALSE(t.steps.empty());
      ASSERT_EQ(t.steps.front().x, m.x0);
      for (std::size_t s = 0; s < t.steps.size(); ++s) {
        const Step& st = t.steps[s];
        for (int k = 0; k < m.d; ++k) ASSERT_EQ(st.r[k], m.reward(k, st.x, st.a));
        ASSERT_GT(m.prob(st.x, st.a, st.x_next), 0.0);
        ASSERT_GT(pi(st.x, st.a), 0.0);
        if (s + 1 < t.steps.size()) {
          ASSERT_EQ(t.steps[s + 1].x, st.x_next);
        }
      }
    }
  }
}
