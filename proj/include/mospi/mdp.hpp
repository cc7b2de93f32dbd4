#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace mospi {

/// Finite multi-objective MDP with d reward signals.
///
/// Transitions are stored flat as p[x][a][x'] and rewards as r[k][x][a].
/// Terminal states are absorbing: they self-loop with probability one and
/// pay zero reward on every objective.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  int d = 0;
  std::vector<double> gamma;  // one discount per objective
  int x0 = 0;
  double r_top = 1.0;
  std::vector<double> p;
  std::vector<double> r;
  std::vector<int> terminal;

  /// An MDP whose every action self-loops with zero reward.
  static TabularMdp self_loops(int n_states, int n_actions, int d, double gamma);

  double& prob(int x, int a, int y) { return p[(static_cast<std::size_t>(x) * n_actions + a) * n_states + y]; }
  double prob(int x, int a, int y) const { return p[(static_cast<std::size_t>(x) * n_actions + a) * n_states + y]; }
  double& reward(int k, int x, int a) { return r[(static_cast<std::size_t>(k) * n_states + x) * n_actions + a]; }
  double reward(int k, int x, int a) const { return r[(static_cast<std::size_t>(k) * n_states + x) * n_actions + a]; }

  std::span<const double> next_row(int x, int a) const {
    return {p.data() + (static_cast<std::size_t>(x) * n_actions + a) * n_states, static_cast<std::size_t>(n_states)};
  }
  bool is_terminal(int x) const;

  /// Throws InvalidInput naming the first violated invariant.
  void validate() const;
};

/// Stochastic tabular policy; row x is a distribution over actions.
struct Policy {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> probs;

  static Policy uniform(int n_states, int n_actions);
  static Policy deterministic(std::span<const int> actions, int n_actions);

  double& operator()(int x, int a) { return probs[static_cast<std::size_t>(x) * n_actions + a]; }
  double operator()(int x, int a) const { return probs[static_cast<std::size_t>(x) * n_actions + a]; }
  std::span<const double> row(int x) const {
    return {probs.data() + static_cast<std::size_t>(x) * n_actions, static_cast<std::size_t>(n_actions)};
  }
  std::span<double> row(int x) {
    return {probs.data() + static_cast<std::size_t>(x) * n_actions, static_cast<std::size_t>(n_actions)};
  }

  void validate(double tol = 1e-9) const;
  void check_shape(const TabularMdp& mdp) const;

  friend bool operator==(const Policy&, const Policy&) = default;
};

/// Non-negative weights used to scalarize objectives for optimization only.
struct Preference {
  std::vector<double> lambdas;
  void validate(int d) const;
  bool is_zero() const;
};

struct ValueBundle {
  int d = 0;
  std::vector<Eigen::VectorXd> v;    // V_k[x]
  std::vector<Eigen::MatrixXd> q;    // Q_k(x, a)
  std::vector<Eigen::MatrixXd> adv;  // A_k = Q_k - V_k
};

struct ScalarizedValues {
  Eigen::VectorXd v;
  Eigen::MatrixXd q;
};

/// State transition matrix under a policy, P^pi(x, x').
Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const Policy& policy);

/// Exact V, Q and advantages by a dense LU solve of (I - gamma_k P^pi) V_k = r_k^pi.
ValueBundle policy_values(const TabularMdp& mdp, const Policy& policy);

/// J_k = V_k(x0) for every objective.
std::vector<double> returns(const TabularMdp& mdp, const Policy& policy);

double scalarized_return(std::span<const double> j, const Preference& pref);

ScalarizedValues scalarize(const ValueBundle& bundle, const Preference& pref);

/// Normalized discounted state distribution (1 - gamma_k) sum_t gamma_k^t P(X_t = x).
Eigen::VectorXd occupancy(const TabularMdp& mdp, const Policy& policy, int k);

/// Performance-difference cross-check: sum_x occ^pi(x) sum_a pi(a|x) A_k^{pi_b}(x,a) / (1 - gamma_k).
std::vector<double> perf_diff_check(const TabularMdp& mdp, const Policy& pi, const Policy& pi_b,
                                    const ValueBundle& baseline_values);

/// Max-norm Bellman residual of the bundle's V for the given policy.
double bellman_residual(const TabularMdp& mdp, const Policy& policy, const ValueBundle& bundle);

}  // namespace mospi
