#include "mospi/spibb.hpp"

#include <cmath>
#include <string>

#include "mospi/error.hpp"
#include "mospi/parallel.hpp"
#include "mospi/policy_lp.hpp"

namespace mospi::spibb {

void SpibbConfig::validate() const {
  if (!(epsilon >= 0.0)) throw InvalidInput("epsilon must be non-negative");
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidInput("delta must lie in (0, 1]");
  if (iterations < 1) throw InvalidInput("iterations must be at least 1");
  if (!(tol >= 0.0)) throw InvalidInput("tolerance must be non-negative");
}

std::vector<double> s_opt_state(int x, std::span<const double> q_lambda_row,
                                const std::vector<std::vector<double>>& adv_rows, std::span<const double> pi_b_row,
                                std::span<const double> e_row, double epsilon, double tol) {
  const std::string where = " in state " + std::to_string(x);
  const std::size_t na = q_lambda_row.size();
  if (pi_b_row.size() != na || e_row.size() != na) throw InvalidInput("row lengths differ" + where);
  for (const auto& adv : adv_rows)
    if (adv.size() != na) throw InvalidInput("advantage row length differs" + where);
  double mass = 0.0;
  for (std::size_t a = 0; a < na; ++a) {
    if (!(pi_b_row[a] >= 0.0)) throw InvalidInput("negative baseline probability" + where);
    if (!(e_row[a] >= 0.0)) throw InvalidInput("negative error bound" + where);
    mass += pi_b_row[a];
  }
  if (std::abs(mass - 1.0) > 1e-9) throw InvalidInput("baseline row does not sum to 1" + where);
  if (!(epsilon >= 0.0)) throw InvalidInput("epsilon must be non-negative");

  StateProblem sp{q_lambda_row, adv_rows, pi_b_row, e_row, epsilon, tol};
  try {
    return solve_state(sp);
  } catch (const DomainError& err) {
    throw DomainError("S-OPT failed in state " + std::to_string(x) + ": " + err.what());
  }
}

Policy improve(const TabularMdp& m_hat, const Policy& pi_b, const Preference& pref, const ErrorFunction& e,
               const SpibbConfig& cfg) {
  cfg.validate();
  pi_b.check_shape(m_hat);
  pref.validate(m_hat.d);
  if (e.n_states != m_hat.n_states || e.n_actions != m_hat.n_actions)
    throw InvalidInput("error function does not match the model");

  const ValueBundle base = policy_values(m_hat, pi_b);
  const int na = m_hat.n_actions;

  Policy current = pi_b;
  for (int sweep = 0; sweep < cfg.iterations; ++sweep) {
    const Eigen::MatrixXd q = sweep == 0 ? scalarize(base, pref).q : scalarize(policy_values(m_hat, current), pref).q;
    Policy next = pi_b;
    parallel_for(static_cast<std::size_t>(m_hat.n_states), cfg.threads, [&](std::size_t xi) {
      const int x = static_cast<int>(xi);
      std::vector<double> q_row(na);
      for (int a = 0; a < na; ++a) q_row[a] = q(x, a);
      std::vector<std::vector<double>> adv(m_hat.d, std::vector<double>(na));
      for (int k = 0; k < m_hat.d; ++k)
        for (int a = 0; a < na; ++a) adv[k][a] = base.adv[k](x, a);
      const std::vector<double> row = s_opt_state(x, q_row, adv, pi_b.row(x), e.row(x), cfg.epsilon, cfg.tol);
      std::copy(row.begin(), row.end(), next.row(x).begin());
    });
    current = std::move(next);
  }
  return current;
}

double improvement_gap_bound(double epsilon, double gamma, double r_top) {
  if (!(epsilon >= 0.0) || !(gamma >= 0.0 && gamma < 1.0) || !(r_top > 0.0))
    throw InvalidInput("improvement_gap_bound needs epsilon >= 0, gamma in [0, 1) and r_top > 0");
  const double v_max = r_top / (1.0 - gamma);
  return epsilon * v_max / (1.0 - gamma);
}

}  // namespace mospi::spibb
