#include "mospi/policy_lp.hpp"

#include <algorithm>
#include <cmath>

#include "mospi/error.hpp"

namespace mospi {

namespace {

void check(const StateProblem& sp) {
  const std::size_t na = sp.baseline.size();
  if (na == 0 || sp.objective.size() != na) throw InvalidInput("state problem rows differ in length");
  if (!sp.errors.empty() && sp.errors.size() != na) throw InvalidInput("error row has wrong length");
  for (const auto& row : sp.advantage_rows)
    if (row.size() != na) throw InvalidInput("advantage row has wrong length");
  if (!(sp.epsilon >= 0.0)) throw InvalidInput("epsilon must be non-negative");
  for (double e : sp.errors)
    if (!(e >= 0.0)) throw InvalidInput("error weights must be non-negative");
}

}  // namespace

StateLp encode_state_lp(const StateProblem& sp) {
  check(sp);
  const std::size_t na = sp.baseline.size();
  StateLp out;
  for (std::size_t a = 0; a < na; ++a)
    if (sp.errors.empty() || std::isfinite(sp.errors[a])) out.free_actions.push_back(static_cast<int>(a));

  const std::size_t nf = out.free_actions.size();
  lp::LpProblem& p = out.problem;
  p.objective.assign(2 * nf, 0.0);
  for (std::size_t f = 0; f < nf; ++f) {
    const double q = sp.objective[out.free_actions[f]];
    p.objective[f] = q;
    p.objective[nf + f] = -q;
  }

  // Mass moved onto free actions balances mass taken off them.
  std::vector<double> balance(2 * nf, 0.0);
  for (std::size_t f = 0; f < nf; ++f) {
    balance[f] = 1.0;
    balance[nf + f] = -1.0;
  }
  p.add_eq(std::move(balance), 0.0);

  // pi(a) >= 0  <=>  w_a - u_a <= pi_b(a)
  for (std::size_t f = 0; f < nf; ++f) {
    std::vector<double> row(2 * nf, 0.0);
    row[f] = -1.0;
    row[nf + f] = 1.0;
    p.add_ub(std::move(row), sp.baseline[out.free_actions[f]]);
  }

  if (!sp.errors.empty() && std::isfinite(sp.epsilon)) {
    std::vector<double> row(2 * nf, 0.0);
    for (std::size_t f = 0; f < nf; ++f) {
      const double e = sp.errors[out.free_actions[f]];
      row[f] = e;
      row[nf + f] = e;
    }
    p.add_ub(std::move(row), sp.epsilon);
  }

  // sum_a pi(a) A(a) >= min(0, baseline sum) - tol. The baseline sum is zero
  // up to rounding, so the baseline row stays feasible without any slack.
  for (const auto& adv : sp.advantage_rows) {
    double base = 0.0;
    for (std::size_t a = 0; a < na; ++a) base += sp.baseline[a] * adv[a];
    std::vector<double> row(2 * nf, 0.0);
    for (std::size_t f = 0; f < nf; ++f) {
      const double v = adv[out.free_actions[f]];
      row[f] = -v;
      row[nf + f] = v;
    }
    p.add_ub(std::move(row), std::max(base, 0.0) + sp.tol);
  }
  return out;
}

std::vector<double> encode_point(const StateLp& lp, const StateProblem& sp, std::span<const double> pi_row) {
  const std::size_t nf = lp.free_actions.size();
  std::vector<double> z(2 * nf, 0.0);
  for (std::size_t f = 0; f < nf; ++f) {
    const double diff = pi_row[lp.free_actions[f]] - sp.baseline[lp.free_actions[f]];
    if (diff > 0.0)
      z[f] = diff;
    else
      z[nf + f] = -diff;
  }
  return z;
}

std::vector<double> decode_state_lp(const StateLp& lp, const StateProblem& sp, std::span<const double> z) {
  const std::size_t nf = lp.free_actions.size();
  std::vector<double> pi(sp.baseline.begin(), sp.baseline.end());
  for (std::size_t f = 0; f < nf; ++f) {
    const int a = lp.free_actions[f];
    pi[a] = std::clamp(sp.baseline[a] + z[f] - z[nf + f], 0.0, 1.0);
  }
  return pi;
}

std::vector<double> solve_state(const StateProblem& sp) {
  const StateLp lp = encode_state_lp(sp);
  std::vector<double> base(sp.baseline.begin(), sp.baseline.end());
  if (lp.free_actions.empty()) return base;

  const lp::LpSolution sol = lp::solve(lp.problem);
  if (sol.status == lp::LpStatus::kInfeasible)
    throw DomainError("state LP infeasible although the baseline row is feasible");
  if (!sol.optimal()) throw DomainError("state LP " + lp::to_string(sol.status));

  // Ties with the baseline keep the baseline row exactly.
  double scale = 1.0;
  for (double q : sp.objective) scale = std::max(scale, std::abs(q));
  if (sol.objective_value <= 1e-12 * scale) return base;
  return decode_state_lp(lp, sp, sol.z);
}

}  // namespace mospi
