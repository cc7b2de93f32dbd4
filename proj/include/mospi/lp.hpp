#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mospi::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// maximize c'z  s.t.  A_eq z = b_eq,  A_ub z <= b_ub,  lower <= z <= upper.
///
/// Empty `lower`/`upper` mean the default bounds [0, +inf). Right-hand
/// sides must be finite; bounds may be infinite.
struct LpProblem {
  std::vector<double> objective;
  std::vector<std::vector<double>> a_eq;
  std::vector<double> b_eq;
  std::vector<std::vector<double>> a_ub;
  std::vector<double> b_ub;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t n_vars() const { return objective.size(); }
  double lower_bound(std::size_t j) const { return lower.empty() ? 0.0 : lower[j]; }
  double upper_bound(std::size_t j) const { return upper.empty() ? kInf : upper[j]; }

  /// Adds one row; returns its index.
  std::size_t add_eq(std::vector<double> row, double rhs);
  std::size_t add_ub(std::vector<double> row, double rhs);

  void validate() const;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kStalled };

std::string to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> z;
  double objective_value = 0.0;
  std::size_t pivots = 0;

  bool optimal() const { return status == LpStatus::kOptimal; }
};

struct LpOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  std::size_t max_pivots = 1'000'000;
};

/// Two-phase dense simplex on the tableau. Deterministic: identical inputs
/// produce bitwise-identical outputs.
LpSolution solve(const LpProblem& problem, const LpOptions& options = {});

/// Largest violation of any constraint or bound at z (0 when feasible).
double max_violation(const LpProblem& problem, std::span<const double> z);

bool assert_feasible(const LpProblem& problem, std::span<const double> z, double tol);

}  // namespace mospi::lp
