#include "mospi/baselines.hpp"

#include <cmath>
#include <string>

#include "mospi/error.hpp"
#include "mospi/parallel.hpp"
#include "mospi/policy_lp.hpp"

namespace mospi {

namespace {

constexpr int kMaxPolicyIterations = 100000;

enum class AdvantageMode { kPerObjective, kScalarized };

Policy constrained_greedy(const TabularMdp& m_hat, const Policy& pi_b, const Preference& pref, AdvantageMode mode,
                          int threads) {
  pi_b.check_shape(m_hat);
  pref.validate(m_hat.d);
  const ValueBundle base = policy_values(m_hat, pi_b);
  const ScalarizedValues sv = scalarize(base, pref);
  const int na = m_hat.n_actions;

  Policy out = pi_b;
  parallel_for(static_cast<std::size_t>(m_hat.n_states), threads, [&](std::size_t xi) {
    const int x = static_cast<int>(xi);
    std::vector<double> q_row(na);
    for (int a = 0; a < na; ++a) q_row[a] = sv.q(x, a);
    std::vector<std::vector<double>> adv;
    if (mode == AdvantageMode::kPerObjective) {
      adv.assign(m_hat.d, std::vector<double>(na));
      for (int k = 0; k < m_hat.d; ++k)
        for (int a = 0; a < na; ++a) adv[k][a] = base.adv[k](x, a);
    } else {
      adv.assign(1, std::vector<double>(na, 0.0));
      for (int a = 0; a < na; ++a) adv[0][a] = sv.q(x, a) - sv.v[x];
    }
    StateProblem sp{q_row, adv, pi_b.row(x), {}, lp::kInf, 1e-9};
    std::vector<double> row;
    try {
      row = solve_state(sp);
    } catch (const DomainError& err) {
      throw DomainError("advantage LP failed in state " + std::to_string(x) + ": " + err.what());
    }
    std::copy(row.begin(), row.end(), out.row(x).begin());
  });
  return out;
}

}  // namespace

Policy linearized_improve(const TabularMdp& m_hat, const Preference& pref) {
  pref.validate(m_hat.d);
  const int ns = m_hat.n_states;
  const int na = m_hat.n_actions;
  if (pref.is_zero()) return Policy::uniform(ns, na);

  Policy pi = Policy::uniform(ns, na);
  std::vector<int> actions(ns, -1);
  for (int it = 0; it < kMaxPolicyIterations; ++it) {
    const Eigen::MatrixXd q = scalarize(policy_values(m_hat, pi), pref).q;
    bool stable = true;
    for (int x = 0; x < ns; ++x) {
      int best = 0;
      for (int a = 1; a < na; ++a)
        if (q(x, a) > q(x, best)) best = a;
      const double slack = 1e-9 * (1.0 + std::abs(q(x, best)));
      if (actions[x] >= 0 && q(x, actions[x]) >= q(x, best) - slack) continue;
      actions[x] = best;
      stable = false;
    }
    if (stable) return pi;
    pi = Policy::deterministic(actions, na);
  }
  throw DomainError("policy iteration did not converge");
}

Policy adv_linearized_improve(const TabularMdp& m_hat, const Policy& pi_b, const Preference& pref, int threads) {
  return constrained_greedy(m_hat, pi_b, pref, AdvantageMode::kPerObjective, threads);
}

Policy scalarized_constraint_improve(const TabularMdp& m_hat, const Policy& pi_b, const Preference& pref,
                                     int threads) {
  return constrained_greedy(m_hat, pi_b, pref, AdvantageMode::kScalarized, threads);
}

Policy mix(const Policy& a, const Policy& b, double alpha) {
  if (a.n_states != b.n_states || a.n_actions != b.n_actions) throw InvalidInput("cannot mix policies of different shapes");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("mixing weight must lie in [0, 1]");
  Policy out = a;
  for (std::size_t i = 0; i < out.probs.size(); ++i) out.probs[i] = (1.0 - alpha) * a.probs[i] + alpha * b.probs[i];
  return out;
}

}  // namespace mospi
