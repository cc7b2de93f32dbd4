#pragma once

#include <span>
#include <vector>

#include "mospi/lp.hpp"

namespace mospi {

/// One state's policy-improvement LP:
///
///   max_pi   <pi, objective>
///   s.t.     sum_a pi(a) A(a) >= min(0, sum_a pi_b(a) A(a)) - tol   for every advantage row
///            sum_a e(a) |pi(a) - pi_b(a)| <= epsilon   (when errors are given)
///            pi in the simplex
///
/// pi is parameterized as pi_b + u - w with u, w >= 0, so the L1 budget is
/// linear. Actions with e(a) = +inf are pinned to pi_b(a).
struct StateProblem {
  std::span<const double> objective;
  std::vector<std::vector<double>> advantage_rows;
  std::span<const double> baseline;
  std::span<const double> errors;  // empty: no budget constraint
  double epsilon = lp::kInf;
  double tol = 0.0;
};

struct StateLp {
  lp::LpProblem problem;
  std::vector<int> free_actions;
};

StateLp encode_state_lp(const StateProblem& sp);

/// LP point corresponding to a given policy row (must keep pinned actions).
std::vector<double> encode_point(const StateLp& lp, const StateProblem& sp, std::span<const double> pi_row);

std::vector<double> decode_state_lp(const StateLp& lp, const StateProblem& sp, std::span<const double> z);

/// Solves the state LP. Returns the baseline row unchanged when no strictly
/// better feasible row exists. Throws DomainError on LP failure.
std::vector<double> solve_state(const StateProblem& sp);

}  // namespace mospi
