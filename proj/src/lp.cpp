#include "mospi/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mospi/error.hpp"

namespace mospi::lp {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kDegenerateStep = 1e-12;
// Consecutive degenerate pivots tolerated under Dantzig pricing before the
// solver falls back to Bland's rule.
constexpr std::size_t kBlandAfter = 8;

enum class Substitution { kShift, kReflect, kSplit };

struct VariableMap {
  Substitution kind;
  std::size_t col;
  std::size_t col2;
  double offset;
};

// Revised simplex: the basis is refactorized from the original columns at
// every iteration, so no pivot error accumulates across iterations.
class Simplex {
 public:
  Simplex(Eigen::MatrixXd a, Eigen::VectorXd b, std::vector<std::size_t> basis, std::size_t max_pivots)
      : a_(std::move(a)),
        b_(std::move(b)),
        basis_(std::move(basis)),
        banned_(static_cast<std::size_t>(a_.cols()), 0),
        max_pivots_(max_pivots) {
    refresh();
  }

  std::size_t rows() const { return basis_.size(); }
  std::size_t cols() const { return static_cast<std::size_t>(a_.cols()); }
  const std::vector<std::size_t>& basis() const { return basis_; }
  std::size_t pivots() const { return pivots_; }
  double value(std::size_t i) const { return x_b_[static_cast<Eigen::Index>(i)]; }

  void ban(std::size_t col) { banned_[col] = 1; }

  /// Row i of B^-1 A.
  Eigen::RowVectorXd tableau_row(std::size_t i) const {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows()));
    unit[static_cast<Eigen::Index>(i)] = 1.0;
    const Eigen::VectorXd w = lu_.transpose().solve(unit);
    return w.transpose() * a_;
  }

  void replace(std::size_t i, std::size_t col) {
    basis_[i] = col;
    ++pivots_;
    refresh();
  }

  void drop_row(std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Eigen::Index m = a_.rows();
    a_.block(r, 0, m - r - 1, a_.cols()) = a_.block(r + 1, 0, m - r - 1, a_.cols()).eval();
    a_.conservativeResize(m - 1, Eigen::NoChange);
    b_.segment(r, m - r - 1) = b_.segment(r + 1, m - r - 1).eval();
    b_.conservativeResize(m - 1);
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
    refresh();
  }

  LpStatus run(const std::vector<double>& costs, double optimality_tol) {
    const std::size_t m = rows();
    const std::size_t n = cols();
    double c_scale = 1.0;
    for (double c : costs) c_scale = std::max(c_scale, std::abs(c));
    const double tol = optimality_tol * c_scale;
    std::vector<char> in_basis(n, 0);
    std::size_t degenerate_streak = 0;
    for (;;) {
      if (pivots_ >= max_pivots_) return LpStatus::kStalled;
      std::fill(in_basis.begin(), in_basis.end(), 0);
      Eigen::VectorXd c_b(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) {
        in_basis[basis_[i]] = 1;
        c_b[static_cast<Eigen::Index>(i)] = costs[basis_[i]];
      }
      const Eigen::VectorXd y = lu_.transpose().solve(c_b);
      const Eigen::RowVectorXd priced = y.transpose() * a_;

      const bool bland = degenerate_streak >= kBlandAfter;
      std::size_t entering = n;
      double best = tol;
      for (std::size_t j = 0; j < n; ++j) {
        if (banned_[j] || in_basis[j]) continue;
        const double d = costs[j] - priced[static_cast<Eigen::Index>(j)];
        if (d <= tol) continue;
        if (bland) {
          entering = j;
          break;
        }
        if (d > best) {
          best = d;
          entering = j;
        }
      }
      if (entering == n) return LpStatus::kOptimal;

      const Eigen::VectorXd dir = lu_.solve(a_.col(static_cast<Eigen::Index>(entering)));
      std::size_t leaving = m;
      double best_ratio = kInf;
      for (std::size_t i = 0; i < m; ++i) {
        const double v = dir[static_cast<Eigen::Index>(i)];
        if (v <= kPivotTol) continue;
        const double ratio = std::max(value(i), 0.0) / v;
        if (leaving == m) {
          leaving = i;
          best_ratio = ratio;
          continue;
        }
        const double tie = 1e-12 * (1.0 + best_ratio);
        if (ratio < best_ratio - tie) {
          leaving = i;
          best_ratio = ratio;
        } else if (ratio <= best_ratio + tie && basis_[i] < basis_[leaving]) {
          leaving = i;
        }
      }
      if (leaving == m) return LpStatus::kUnbounded;
      degenerate_streak = best_ratio <= kDegenerateStep ? degenerate_streak + 1 : 0;
      replace(leaving, entering);
    }
  }

 private:
  void refresh() {
    const auto m = static_cast<Eigen::Index>(rows());
    Eigen::MatrixXd basis_matrix(m, m);
    for (Eigen::Index i = 0; i < m; ++i) basis_matrix.col(i) = a_.col(static_cast<Eigen::Index>(basis_[i]));
    lu_.compute(basis_matrix);
    x_b_ = lu_.solve(b_);
  }

  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  std::vector<std::size_t> basis_;
  std::vector<char> banned_;
  std::size_t max_pivots_;
  std::size_t pivots_ = 0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd x_b_;
};

struct StandardRow {
  std::vector<double> a;
  double b;
  bool equality;
};

}  // namespace

std::size_t LpProblem::add_eq(std::vector<double> row, double rhs) {
  a_eq.push_back(std::move(row));
  b_eq.push_back(rhs);
  return a_eq.size() - 1;
}

std::size_t LpProblem::add_ub(std::vector<double> row, double rhs) {
  a_ub.push_back(std::move(row));
  b_ub.push_back(rhs);
  return a_ub.size() - 1;
}

void LpProblem::validate() const {
  const std::size_t n = n_vars();
  for (double c : objective)
    if (!std::isfinite(c)) throw InvalidInput("lp objective must be finite");
  if (a_eq.size() != b_eq.size() || a_ub.size() != b_ub.size()) throw InvalidInput("lp row/rhs count mismatch");
  for (const auto& row : a_eq)
    if (row.size() != n) throw InvalidInput("lp equality row has wrong length");
  for (const auto& row : a_ub)
    if (row.size() != n) throw InvalidInput("lp inequality row has wrong length");
  for (double b : b_eq)
    if (!std::isfinite(b)) throw InvalidInput("lp right-hand sides must be finite");
  for (double b : b_ub)
    if (!std::isfinite(b)) throw InvalidInput("lp right-hand sides must be finite");
  if (!lower.empty() && lower.size() != n) throw InvalidInput("lp lower bounds have wrong length");
  if (!upper.empty() && upper.size() != n) throw InvalidInput("lp upper bounds have wrong length");
}

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kStalled: return "stalled";
  }
  return "unknown";
}

LpSolution solve(const LpProblem& problem, const LpOptions& options) {
  problem.validate();
  const std::size_t n = problem.n_vars();

  // Map every original variable onto non-negative standard-form columns.
  std::vector<VariableMap> maps(n);
  std::vector<std::pair<std::size_t, double>> boxes;
  std::size_t ny = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = problem.lower_bound(j);
    const double hi = problem.upper_bound(j);
    if (lo > hi) return {LpStatus::kInfeasible, {}, 0.0, 0};
    if (std::isfinite(lo)) {
      maps[j] = {Substitution::kShift, ny++, 0, lo};
      if (std::isfinite(hi)) boxes.emplace_back(maps[j].col, hi - lo);
    } else if (std::isfinite(hi)) {
      maps[j] = {Substitution::kReflect, ny++, 0, hi};
    } else {
      maps[j] = {Substitution::kSplit, ny, ny + 1, 0.0};
      ny += 2;
    }
  }

  auto substitute = [&](const std::vector<double>& src, double b, bool eq) {
    StandardRow row{std::vector<double>(ny, 0.0), b, eq};
    for (std::size_t j = 0; j < n; ++j) {
      const double v = src[j];
      if (v == 0.0) continue;
      const VariableMap& m = maps[j];
      switch (m.kind) {
        case Substitution::kShift:
          row.a[m.col] += v;
          row.b -= v * m.offset;
          break;
        case Substitution::kReflect:
          row.a[m.col] -= v;
          row.b -= v * m.offset;
          break;
        case Substitution::kSplit:
          row.a[m.col] += v;
          row.a[m.col2] -= v;
          break;
      }
    }
    return row;
  };

  std::vector<StandardRow> rows;
  for (std::size_t i = 0; i < problem.a_eq.size(); ++i) rows.push_back(substitute(problem.a_eq[i], problem.b_eq[i], true));
  for (std::size_t i = 0; i < problem.a_ub.size(); ++i) rows.push_back(substitute(problem.a_ub[i], problem.b_ub[i], false));
  for (const auto& [col, width] : boxes) {
    StandardRow row{std::vector<double>(ny, 0.0), width, false};
    row.a[col] = 1.0;
    rows.push_back(std::move(row));
  }

  const std::size_t m = rows.size();
  std::size_t n_slack = 0;
  for (const auto& r : rows) n_slack += r.equality ? 0 : 1;
  std::vector<double> slack_sign(m, 0.0);
  std::vector<std::size_t> slack_col(m, 0);
  std::size_t n_art = 0;
  {
    std::size_t s = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!rows[i].equality) {
        slack_col[i] = ny + s++;
        slack_sign[i] = 1.0;
      }
      if (rows[i].b < 0.0) {
        for (double& v : rows[i].a) v = -v;
        rows[i].b = -rows[i].b;
        slack_sign[i] = -slack_sign[i];
      }
      if (slack_sign[i] != 1.0) ++n_art;
    }
  }

  const std::size_t n_real = ny + n_slack;
  const std::size_t n_cols = n_real + n_art;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n_cols));
  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  std::vector<std::size_t> basis(m);
  std::size_t next_art = n_real;
  double b_scale = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < ny; ++j) a(r, static_cast<Eigen::Index>(j)) = rows[i].a[j];
    if (slack_sign[i] != 0.0) a(r, static_cast<Eigen::Index>(slack_col[i])) = slack_sign[i];
    b[r] = rows[i].b;
    b_scale = std::max(b_scale, std::abs(rows[i].b));
    if (slack_sign[i] == 1.0) {
      basis[i] = slack_col[i];
    } else {
      a(r, static_cast<Eigen::Index>(next_art)) = 1.0;
      basis[i] = next_art++;
    }
  }

  Simplex simplex(std::move(a), std::move(b), std::move(basis), options.max_pivots);
  LpSolution sol;

  if (n_art > 0) {
    std::vector<double> phase1(n_cols, 0.0);
    for (std::size_t j = n_real; j < n_cols; ++j) phase1[j] = -1.0;
    const LpStatus s1 = simplex.run(phase1, options.optimality_tol);
    sol.pivots = simplex.pivots();
    if (s1 == LpStatus::kStalled) {
      sol.status = s1;
      return sol;
    }
    double infeasibility = 0.0;
    for (std::size_t i = 0; i < simplex.rows(); ++i)
      if (simplex.basis()[i] >= n_real) infeasibility += std::abs(simplex.value(i));
    if (infeasibility > options.feasibility_tol * b_scale) {
      sol.status = LpStatus::kInfeasible;
      return sol;
    }

    // Drive remaining (zero-valued) artificials out of the basis; rows where
    // that is impossible are linearly dependent and are dropped.
    for (std::size_t i = 0; i < simplex.rows();) {
      if (simplex.basis()[i] < n_real) {
        ++i;
        continue;
      }
      const Eigen::RowVectorXd row = simplex.tableau_row(i);
      std::size_t best_j = n_real;
      double best_abs = kPivotTol;
      for (std::size_t j = 0; j < n_real; ++j) {
        const double v = std::abs(row[static_cast<Eigen::Index>(j)]);
        if (v > best_abs && std::find(simplex.basis().begin(), simplex.basis().end(), j) == simplex.basis().end()) {
          best_abs = v;
          best_j = j;
        }
      }
      if (best_j < n_real) {
        simplex.replace(i, best_j);
        ++i;
      } else {
        simplex.drop_row(i);
      }
    }
    for (std::size_t j = n_real; j < n_cols; ++j) simplex.ban(j);
  }

  std::vector<double> phase2(n_cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = problem.objective[j];
    const VariableMap& mp = maps[j];
    switch (mp.kind) {
      case Substitution::kShift: phase2[mp.col] += c; break;
      case Substitution::kReflect: phase2[mp.col] -= c; break;
      case Substitution::kSplit:
        phase2[mp.col] += c;
        phase2[mp.col2] -= c;
        break;
    }
  }
  const LpStatus s2 = simplex.run(phase2, options.optimality_tol);
  sol.pivots = simplex.pivots();
  if (s2 != LpStatus::kOptimal) {
    sol.status = s2;
    return sol;
  }

  std::vector<double> y(n_cols, 0.0);
  for (std::size_t i = 0; i < simplex.rows(); ++i) y[simplex.basis()[i]] = std::max(simplex.value(i), 0.0);

  sol.z.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const VariableMap& mp = maps[j];
    switch (mp.kind) {
      case Substitution::kShift: sol.z[j] = mp.offset + y[mp.col]; break;
      case Substitution::kReflect: sol.z[j] = mp.offset - y[mp.col]; break;
      case Substitution::kSplit: sol.z[j] = y[mp.col] - y[mp.col2]; break;
    }
  }
  sol.objective_value = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective_value += problem.objective[j] * sol.z[j];
  sol.status = LpStatus::kOptimal;
  return sol;
}

double max_violation(const LpProblem& problem, std::span<const double> z) {
  if (z.size() != problem.n_vars()) throw InvalidInput("point has wrong dimension");
  double worst = 0.0;
  auto dot = [&](const std::vector<double>& row) {
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * z[j];
    return s;
  };
  for (std::size_t i = 0; i < problem.a_eq.size(); ++i)
    worst = std::max(worst, std::abs(dot(problem.a_eq[i]) - problem.b_eq[i]));
  for (std::size_t i = 0; i < problem.a_ub.size(); ++i)
    worst = std::max(worst, dot(problem.a_ub[i]) - problem.b_ub[i]);
  for (std::size_t j = 0; j < z.size(); ++j) {
    worst = std::max(worst, problem.lower_bound(j) - z[j]);
    worst = std::max(worst, z[j] - problem.upper_bound(j));
  }
  return std::isnan(worst) ? kInf : worst;
}

bool assert_feasible(const LpProblem& problem, std::span<const double> z, double tol) {
  return max_violation(problem, z) <= tol;
}

}  // namespace mospi::lp
