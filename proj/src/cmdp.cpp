#include "mospi/cmdp.hpp"

#include <cmath>

#include "mospi/error.hpp"
#include "mospi/lp.hpp"

namespace mospi {

std::vector<double> CmdpSpec::initial_distribution() const {
  if (!mu.empty()) return mu;
  std::vector<double> out(mdp.n_states, 0.0);
  out[mdp.x0] = 1.0;
  return out;
}

void CmdpSpec::validate() const {
  mdp.validate();
  if (thresholds.size() != static_cast<std::size_t>(mdp.d - 1))
    throw InvalidInput("need one threshold per constraint signal (d - 1)");
  for (double c : thresholds)
    if (std::isnan(c)) throw InvalidInput("thresholds must not be NaN");
  for (double g : mdp.gamma)
    if (g != mdp.gamma[0]) throw InvalidInput("the occupancy LP needs a shared discount");
  if (!mu.empty()) {
    if (mu.size() != static_cast<std::size_t>(mdp.n_states)) throw InvalidInput("mu has wrong length");
    double s = 0.0;
    for (double v : mu) {
      if (!(v >= 0.0)) throw InvalidInput("mu must be non-negative");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw InvalidInput("mu must sum to 1");
  }
}

Policy occupancy_to_policy(const Eigen::MatrixXd& rho) {
  const int ns = static_cast<int>(rho.rows());
  const int na = static_cast<int>(rho.cols());
  Policy pi = Policy::uniform(ns, na);
  for (int x = 0; x < ns; ++x) {
    double mass = 0.0;
    for (int a = 0; a < na; ++a) mass += std::max(rho(x, a), 0.0);
    if (!(mass > 1e-12)) continue;
    for (int a = 0; a < na; ++a) pi(x, a) = std::max(rho(x, a), 0.0) / mass;
  }
  return pi;
}

CmdpSolution solve_cmdp(const CmdpSpec& spec) {
  spec.validate();
  const TabularMdp& m = spec.mdp;
  const int ns = m.n_states;
  const int na = m.n_actions;
  const double gamma = m.gamma[0];
  const std::size_t nv = static_cast<std::size_t>(ns) * na;
  auto var = [na](int x, int a) { return static_cast<std::size_t>(x) * na + a; };

  lp::LpProblem p;
  p.objective.assign(nv, 0.0);
  for (int x = 0; x < ns; ++x)
    for (int a = 0; a < na; ++a) p.objective[var(x, a)] = m.reward(0, x, a);

  const std::vector<double> mu = spec.initial_distribution();
  for (int x = 0; x < ns; ++x) {
    std::vector<double> row(nv, 0.0);
    for (int a = 0; a < na; ++a) row[var(x, a)] += 1.0;
    for (int xp = 0; xp < ns; ++xp)
      for (int ap = 0; ap < na; ++ap) {
        const double q = m.prob(xp, ap, x);
        if (q != 0.0) row[var(xp, ap)] -= gamma * q;
      }
    p.add_eq(std::move(row), mu[x]);
  }

  const double sign = spec.sense == ConstraintSense::kAtMost ? 1.0 : -1.0;
  for (int i = 1; i < m.d; ++i) {
    const double c = spec.thresholds[i - 1];
    if (!std::isfinite(c)) {
      const bool vacuous = spec.sense == ConstraintSense::kAtMost ? c > 0 : c < 0;
      if (vacuous) continue;
      CmdpSolution none;
      return none;
    }
    std::vector<double> row(nv, 0.0);
    for (int x = 0; x < ns; ++x)
      for (int a = 0; a < na; ++a) row[var(x, a)] = sign * m.reward(i, x, a);
    p.add_ub(std::move(row), sign * c);
  }

  const lp::LpSolution sol = lp::solve(p);
  CmdpSolution out;
  if (sol.status == lp::LpStatus::kInfeasible) return out;
  if (!sol.optimal()) throw DomainError("occupancy LP " + lp::to_string(sol.status));

  out.feasible = true;
  out.occupancy.resize(ns, na);
  for (int x = 0; x < ns; ++x)
    for (int a = 0; a < na; ++a) out.occupancy(x, a) = sol.z[var(x, a)];
  out.policy = occupancy_to_policy(out.occupancy);
  out.objective = sol.objective_value;
  return out;
}

std::vector<double> returns_from(const TabularMdp& mdp, const Policy& policy, const std::vector<double>& mu) {
  if (mu.size() != static_cast<std::size_t>(mdp.n_states)) throw InvalidInput("mu has wrong length");
  const ValueBundle b = policy_values(mdp, policy);
  std::vector<double> j(mdp.d, 0.0);
  for (int k = 0; k < mdp.d; ++k)
    for (int x = 0; x < mdp.n_states; ++x) j[k] += mu[x] * b.v[k][x];
  return j;
}

}  // namespace mospi
