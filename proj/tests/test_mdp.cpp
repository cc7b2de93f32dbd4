#include <gtest/gtest.h>

#include <cmath>

#include "mospi/error.hpp"
#include "mospi/mdp.hpp"
#include "support/oracles.hpp"

using namespace mospi;

namespace {

TabularMdp two_state_chain(double gamma) {
  // x0 -> x1 deterministically, x1 absorbing; reward 1 at x0 only.
  TabularMdp m = TabularMdp::self_loops(2, 1, 1, gamma);
  m.prob(0, 0, 0) = 0.0;
  m.prob(0, 0, 1) = 1.0;
  m.reward(0, 0, 0) = 1.0;
  m.terminal = {1};
  return m;
}

}  // namespace

TEST(PolicyValues, SingleStateGeometricSeries) {
  TabularMdp m = TabularMdp::self_loops(1, 1, 1, 0.5);
  m.r_top = 3.0;
  m.reward(0, 0, 0) = 3.0;
  const ValueBundle b = policy_values(m, Policy::uniform(1, 1));
  EXPECT_NEAR(b.v[0](0), 6.0, 1e-12);
  EXPECT_NEAR(b.q[0](0, 0), 6.0, 1e-12);
  EXPECT_NEAR(b.adv[0](0, 0), 0.0, 1e-12);
  EXPECT_NEAR(returns(m, Policy::uniform(1, 1))[0], 6.0, 1e-12);
}

TEST(PolicyValues, ZeroRewardGivesZeroValues) {
  Rng rng(3);
  TabularMdp m = oracle::random_mdp(rng, 4, 3, 2, 0.9);
  for (int x = 0; x < 4; ++x)
    for (int a = 0; a < 3; ++a) m.reward(1, x, a) = 0.0;
  const ValueBundle b = policy_values(m, oracle::random_policy(rng, 4, 3));
  EXPECT_EQ(b.v[1].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(b.q[1].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(b.adv[1].cwiseAbs().maxCoeff(), 0.0);
}

TEST(PolicyValues, TwoStateChain) {
  const TabularMdp m = two_state_chain(0.9);
  const ValueBundle b = policy_values(m, Policy::uniform(2, 1));
  EXPECT_NEAR(b.v[0](0), 1.0, 1e-12);
  EXPECT_NEAR(b.v[0](1), 0.0, 1e-12);
}

TEST(PolicyValues, MatchesFixedPointIteration) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const TabularMdp m = oracle::random_mdp(rng, 5, 3, 2, 0.8);
    const Policy pi = oracle::random_policy(rng, 5, 3, 0.3);
    const ValueBundle b = policy_values(m, pi);
    for (int k = 0; k < 2; ++k) {
      const auto v = oracle::iterate_values(m, pi, k);
      for (int x = 0; x < 5; ++x) EXPECT_NEAR(b.v[k](x), v[x], 1e-9);
    }
  }
}

TEST(PolicyValues, RejectsShapeMismatch) {
  const TabularMdp m = two_state_chain(0.9);
  EXPECT_THROW(policy_values(m, Policy::uniform(3, 1)), InvalidInput);
}

TEST(Scalarize, WeightedSums) {
  TabularMdp m = TabularMdp::self_loops(1, 2, 2, 0.0);
  m.reward(0, 0, 0) = m.reward(0, 0, 1) = 1.0;
  m.reward(1, 0, 0) = m.reward(1, 0, 1) = -1.0;
  const ValueBundle b = policy_values(m, Policy::uniform(1, 2));
  const ScalarizedValues s = scalarize(b, Preference{{2.0, 3.0}});
  EXPECT_NEAR(s.q(0, 0), -1.0, 1e-12);
  EXPECT_NEAR(s.q(0, 1), -1.0, 1e-12);
  const ScalarizedValues e0 = scalarize(b, Preference{{1.0, 0.0}});
  EXPECT_NEAR(e0.q(0, 0), b.q[0](0, 0), 1e-15);
  const ScalarizedValues zero = scalarize(b, Preference{{0.0, 0.0}});
  EXPECT_EQ(zero.q.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(scalarize(b, Preference{{1.0}}), InvalidInput);
  EXPECT_THROW(scalarize(b, Preference{{1.0, -1.0}}), InvalidInput);
}

TEST(Occupancy, Examples) {
  const Eigen::VectorXd one = occupancy(TabularMdp::self_loops(1, 1, 1, 0.7), Policy::uniform(1, 1), 0);
  EXPECT_NEAR(one(0), 1.0, 1e-12);

  TabularMdp chain = two_state_chain(0.5);
  const Eigen::VectorXd c = occupancy(chain, Policy::uniform(2, 1), 0);
  EXPECT_NEAR(c(0), 0.5, 1e-12);
  EXPECT_NEAR(c(1), 0.5, 1e-12);

  chain.x0 = 1;  // absorbing start
  const Eigen::VectorXd t = occupancy(chain, Policy::uniform(2, 1), 0);
  EXPECT_NEAR(t(0), 0.0, 1e-12);
  EXPECT_NEAR(t(1), 1.0, 1e-12);
}

TEST(Occupancy, InvariantToActionRelabelling) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const TabularMdp m = oracle::random_mdp(rng, 4, 3, 1, 0.9);
    const Policy pi = oracle::random_policy(rng, 4, 3);
    const int perm[3] = {2, 0, 1};
    TabularMdp mp = m;
    Policy pp = pi;
    for (int x = 0; x < 4; ++x)
      for (int a = 0; a < 3; ++a) {
        pp(x, perm[a]) = pi(x, a);
        mp.reward(0, x, perm[a]) = m.reward(0, x, a);
        for (int y = 0; y < 4; ++y) mp.prob(x, perm[a], y) = m.prob(x, a, y);
      }
    const Eigen::VectorXd o1 = occupancy(m, pi, 0), o2 = occupancy(mp, pp, 0);
    EXPECT_LT((o1 - o2).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(o1.sum(), 1.0, 1e-8);
    EXPECT_GE(o1.minCoeff(), -1e-15);
  }
}

TEST(PerfDiff, ZeroForIdenticalPolicies) {
  Rng rng(8);
  const TabularMdp m = oracle::random_mdp(rng, 3, 2, 2, 0.9);
  const Policy pi = oracle::random_policy(rng, 3, 2);
  const auto diff = perf_diff_check(m, pi, pi, policy_values(m, pi));
  for (double v : diff) EXPECT_NEAR(v, 0.0, 1e-10);
}

// Property suites over random instances.

TEST(MdpProperties, ValueBundleInvariants) {
  Rng rng(1001);
  for (int trial = 0; trial < 1000; ++trial) {
    const int ns = 1 + static_cast<int>(rng.index(6)), na = 1 + static_cast<int>(rng.index(3));
    const int d = 1 + static_cast<int>(rng.index(3));
    const double gamma = 0.99 * rng.uniform();
    const TabularMdp m = oracle::random_mdp(rng, ns, na, d, gamma, 5.0);
    const Policy pi = oracle::random_policy(rng, ns, na, 0.3);
    const ValueBundle b = policy_values(m, pi);
    ASSERT_LT(bellman_residual(m, pi, b), 1e-6);
    const Eigen::MatrixXd p = policy_transition_matrix(m, pi);
    for (int x = 0; x < ns; ++x) ASSERT_NEAR(p.row(x).sum(), 1.0, 1e-12);
    for (int k = 0; k < d; ++k) {
      ASSERT_LE(b.v[k].cwiseAbs().maxCoeff(), m.r_top / (1.0 - gamma) + 1e-9);
      for (int x = 0; x < ns; ++x) {
        double s = 0.0;
        for (int a = 0; a < na; ++a) {
          s += pi(x, a) * b.adv[k](x, a);
          ASSERT_NEAR(b.adv[k](x, a), b.q[k](x, a) - b.v[k](x), 1e-12);
        }
        ASSERT_NEAR(s, 0.0, 1e-6);
      }
      const Eigen::VectorXd occ = occupancy(m, pi, k);
      ASSERT_NEAR(occ.sum(), 1.0, 1e-8);
      ASSERT_GE(occ.minCoeff(), -1e-12);
    }
  }
}

TEST(MdpProperties, PerformanceDifferenceMatchesDirectEvaluation) {
  Rng rng(1002);
  for (int trial = 0; trial < 1000; ++trial) {
    const int ns = 1 + static_cast<int>(rng.index(6)), na = 1 + static_cast<int>(rng.index(3));
    const TabularMdp m = oracle::random_mdp(rng, ns, na, 2, 0.95 * rng.uniform());
    const Policy pi = oracle::random_policy(rng, ns, na, 0.3);
    const Policy pi_b = oracle::random_policy(rng, ns, na, 0.3);
    const auto diff = perf_diff_check(m, pi, pi_b, policy_values(m, pi_b));
    const auto j = returns(m, pi), jb = returns(m, pi_b);
    for (int k = 0; k < 2; ++k) ASSERT_NEAR(diff[k], j[k] - jb[k], 1e-6);
  }
}

TEST(Validation, RejectsBrokenModels) {
  TabularMdp m = TabularMdp::self_loops(2, 2, 1, 0.9);
  m.validate();
  TabularMdp bad = m;
  bad.prob(0, 0, 0) = 0.5;
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = m;
  bad.gamma = {1.0};
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = m;
  bad.reward(0, 1, 1) = 2.0;  // r_top is 1
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = m;
  bad.terminal = {0};
  bad.reward(0, 0, 0) = 0.5;  // terminal must pay zero
  EXPECT_THROW(bad.validate(), InvalidInput);

  Policy p = Policy::uniform(2, 2);
  p(0, 0) = 0.7;
  EXPECT_THROW(p.validate(), InvalidInput);
}
