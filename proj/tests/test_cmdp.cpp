#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mospi/cmdp.hpp"
#include "mospi/error.hpp"
#include "support/oracles.hpp"

using namespace mospi;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double flow_residual(const CmdpSpec& spec, const Eigen::MatrixXd& rho) {
  const TabularMdp& m = spec.mdp;
  const auto mu = spec.initial_distribution();
  double worst = 0.0;
  for (int x = 0; x < m.n_states; ++x) {
    double inflow = mu[x];
    for (int y = 0; y < m.n_states; ++y)
      for (int a = 0; a < m.n_actions; ++a) inflow += m.gamma[0] * m.prob(y, a, x) * rho(y, a);
    worst = std::max(worst, std::abs(rho.row(x).sum() - inflow));
  }
  return worst;
}

}  // namespace

TEST(SolveCmdp, VacuousConstraintsMatchValueIteration) {
  Rng rng(60);
  for (int trial = 0; trial < 20; ++trial) {
    CmdpSpec spec;
    spec.mdp = oracle::random_mdp(rng, 5, 3, 2, 0.9);
    spec.thresholds = {kInf};
    const CmdpSolution sol = solve_cmdp(spec);
    ASSERT_TRUE(sol.feasible);
    const auto v = oracle::optimal_values(spec.mdp, {1.0, 0.0});
    EXPECT_NEAR(returns(spec.mdp, sol.policy)[0], v[spec.mdp.x0], 1e-6);
    EXPECT_NEAR(sol.objective, v[spec.mdp.x0], 1e-6);
  }
}

TEST(SolveCmdp, BindingBanditSplitsMass) {
  const double gamma = 0.8;
  CmdpSpec spec;
  spec.mdp = TabularMdp::self_loops(1, 2, 2, gamma);
  spec.mdp.reward(0, 0, 0) = 1.0;
  spec.mdp.reward(1, 0, 0) = 1.0;
  const double c = 0.5 / (1.0 - gamma);
  spec.thresholds = {c};
  const CmdpSolution sol = solve_cmdp(spec);
  ASSERT_TRUE(sol.feasible);
  const auto j = returns(spec.mdp, sol.policy);
  EXPECT_NEAR(j[1], c, 1e-9);
  EXPECT_NEAR(j[0], c, 1e-9);
  EXPECT_NEAR(sol.policy(0, 0), 0.5, 1e-9);
}

TEST(SolveCmdp, ConstantSignalIsInfeasible) {
  CmdpSpec spec;
  spec.mdp = TabularMdp::self_loops(2, 2, 2, 0.9);
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 2; ++a) spec.mdp.reward(1, x, a) = 1.0;
  spec.thresholds = {5.0};  // below 1 / (1 - gamma) = 10
  EXPECT_FALSE(solve_cmdp(spec).feasible);
}

TEST(SolveCmdp, LowerBoundSense) {
  CmdpSpec spec;
  spec.mdp = TabularMdp::self_loops(1, 2, 2, 0.5);
  spec.mdp.reward(0, 0, 0) = 1.0;    // objective favours action 0
  spec.mdp.reward(1, 0, 0) = -1.0;   // which is penalized on the constraint
  spec.sense = ConstraintSense::kAtLeast;
  spec.thresholds = {-0.5};  // J_1 >= -0.5 allows a quarter of the mass on action 0
  const CmdpSolution sol = solve_cmdp(spec);
  ASSERT_TRUE(sol.feasible);
  const auto j = returns(spec.mdp, sol.policy);
  EXPECT_NEAR(j[1], -0.5, 1e-9);
  EXPECT_NEAR(sol.policy(0, 0), 0.25, 1e-9);
}

TEST(SolveCmdp, RejectsShapeErrors) {
  CmdpSpec spec;
  spec.mdp = TabularMdp::self_loops(2, 2, 3, 0.9);
  spec.thresholds = {1.0};
  EXPECT_THROW(solve_cmdp(spec), InvalidInput);
  spec.thresholds = {1.0, std::nan("")};
  EXPECT_THROW(solve_cmdp(spec), InvalidInput);
  spec.thresholds = {1.0, 1.0};
  spec.mu = {0.5, 0.6};
  EXPECT_THROW(solve_cmdp(spec), InvalidInput);
}

TEST(OccupancyToPolicy, Examples) {
  Eigen::MatrixXd one_hot(2, 2);
  one_hot << 0.0, 3.0, 1.0, 0.0;
  const Policy d = occupancy_to_policy(one_hot);
  EXPECT_EQ(d(0, 1), 1.0);
  EXPECT_EQ(d(1, 0), 1.0);
  Eigen::MatrixXd rows(2, 2);
  rows << 2.0, 2.0, 0.0, 0.0;
  const Policy p = occupancy_to_policy(rows);
  EXPECT_EQ(p(0, 0), 0.5);
  EXPECT_EQ(p(1, 0), 0.5);  // zero mass: uniform
}

// Property suites.

TEST(CmdpProperties, FlowConservationAndConstraintSatisfaction) {
  Rng rng(6001);
  for (int trial = 0; trial < 1000; ++trial) {
    const int ns = 1 + static_cast<int>(rng.index(5)), na = 1 + static_cast<int>(rng.index(3));
    const int d = 2 + static_cast<int>(rng.index(2));
    CmdpSpec spec;
    spec.mdp = oracle::random_mdp(rng, ns, na, d, 0.95 * rng.uniform());
    if (rng.uniform() < 0.5) spec.mu = oracle::random_policy(rng, 1, ns).probs;
    spec.sense = rng.uniform() < 0.5 ? ConstraintSense::kAtMost : ConstraintSense::kAtLeast;
    // Thresholds achieved by a random policy keep the problem feasible.
    const auto j_ref = returns_from(spec.mdp, oracle::random_policy(rng, ns, na), spec.initial_distribution());
    for (int k = 1; k < d; ++k) spec.thresholds.push_back(j_ref[k]);

    const CmdpSolution sol = solve_cmdp(spec);
    ASSERT_TRUE(sol.feasible);
    ASSERT_LT(flow_residual(spec, sol.occupancy), 1e-7);
    ASSERT_GE(sol.occupancy.minCoeff(), -1e-9);
    const auto j = returns_from(spec.mdp, sol.policy, spec.initial_distribution());
    for (int k = 1; k < d; ++k) {
      if (spec.sense == ConstraintSense::kAtMost) {
        ASSERT_LE(j[k], spec.thresholds[k - 1] + 1e-6);
      } else {
        ASSERT_GE(j[k], spec.thresholds[k - 1] - 1e-6);
      }
    }
    ASSERT_GE(j[0], j_ref[0] - 1e-6);  // the reference policy is feasible too

    // Occupancy of the extracted policy reproduces the LP's state mass.
    const double g = spec.mdp.gamma[0];
    const Eigen::MatrixXd p = policy_transition_matrix(spec.mdp, sol.policy);
    Eigen::VectorXd mu(ns);
    for (int x = 0; x < ns; ++x) mu(x) = spec.initial_distribution()[x];
    const Eigen::VectorXd mass =
        (Eigen::MatrixXd::Identity(ns, ns) - g * p.transpose()).partialPivLu().solve(mu);
    for (int x = 0; x < ns; ++x) ASSERT_NEAR(mass(x), sol.occupancy.row(x).sum(), 1e-6);
  }
}

TEST(CmdpProperties, VacuousConstraintsMatchValueIterationOnManyMdps) {
  Rng rng(6002);
  for (int trial = 0; trial < 1000; ++trial) {
    const int ns = 1 + static_cast<int>(rng.index(5)), na = 1 + static_cast<int>(rng.index(3));
    CmdpSpec spec;
    spec.mdp = oracle::random_mdp(rng, ns, na, 2, 0.9 * rng.uniform());
    spec.thresholds = {kInf};
    const CmdpSolution sol = solve_cmdp(spec);
    ASSERT_TRUE(sol.feasible);
    const auto v = oracle::optimal_values(spec.mdp, {1.0, 0.0});
    ASSERT_NEAR(returns(spec.mdp, sol.policy)[0], v[spec.mdp.x0], 1e-6);
  }
}
