#pragma once

#include <vector>

#include "mospi/mdp.hpp"

namespace mospi {

/// Direction of the constraint J_i ? c_i on signals i >= 1.
enum class ConstraintSense {
  kAtMost,   // J_i <= c_i (cost signals)
  kAtLeast,  // J_i >= c_i (reward signals such as negative pit penalties)
};

/// Objective 0 of `mdp` is maximized; objectives 1..d-1 are constrained by
/// `thresholds` (length d - 1, +/-inf marks a vacuous constraint).
struct CmdpSpec {
  TabularMdp mdp;
  std::vector<double> thresholds;
  std::vector<double> mu;  // empty: one-hot at mdp.x0
  ConstraintSense sense = ConstraintSense::kAtMost;

  std::vector<double> initial_distribution() const;
  void validate() const;
};

struct CmdpSolution {
  bool feasible = false;
  Policy policy;
  /// Unnormalized discounted occupancy rho(x, a), total mass 1 / (1 - gamma).
  Eigen::MatrixXd occupancy;
  double objective = 0.0;
};

/// Dual occupancy-measure LP:
///   max sum rho r_0  s.t.  sum rho r_i (<= or >=) c_i,
///   sum_a rho(x,a) = gamma sum_{x',a'} p(x|x',a') rho(x',a') + mu(x),  rho >= 0.
CmdpSolution solve_cmdp(const CmdpSpec& spec);

/// Row-normalizes rho; states without mass get a uniform row.
Policy occupancy_to_policy(const Eigen::MatrixXd& rho);

/// J_k(mu) = sum_x mu(x) V_k(x) for every objective.
std::vector<double> returns_from(const TabularMdp& mdp, const Policy& policy, const std::vector<double>& mu);

}  // namespace mospi
