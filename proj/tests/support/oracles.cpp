#include "oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mospi::oracle {

TabularMdp random_mdp(Rng& rng, int n_states, int n_actions, int d, double gamma, double r_top, double zero_frac) {
  TabularMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.d = d;
  m.gamma.assign(static_cast<std::size_t>(d), gamma);
  m.x0 = 0;
  m.r_top = r_top;
  m.p.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
  m.r.assign(static_cast<std::size_t>(d) * n_states * n_actions, 0.0);
  for (int x = 0; x < n_states; ++x)
    for (int a = 0; a < n_actions; ++a) {
      double total = 0.0;
      for (int y = 0; y < n_states; ++y) {
        const double w = rng.uniform() < zero_frac ? 0.0 : rng.uniform();
        m.prob(x, a, y) = w;
        total += w;
      }
      if (total == 0.0) {
        m.prob(x, a, static_cast<int>(rng.index(static_cast<std::uint64_t>(n_states)))) = 1.0;
      } else {
        for (int y = 0; y < n_states; ++y) m.prob(x, a, y) /= total;
      }
    }
  for (double& v : m.r) v = r_top * (2.0 * rng.uniform() - 1.0);
  return m;
}

Policy random_policy(Rng& rng, int n_states, int n_actions, double zero_frac) {
  Policy p;
  p.n_states = n_states;
  p.n_actions = n_actions;
  p.probs.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
  for (int x = 0; x < n_states; ++x) {
    double total = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      const double w = rng.uniform() < zero_frac ? 0.0 : rng.uniform();
      p(x, a) = w;
      total += w;
    }
    if (total == 0.0) {
      p(x, static_cast<int>(rng.index(static_cast<std::uint64_t>(n_actions)))) = 1.0;
    } else {
      for (int a = 0; a < n_actions; ++a) p(x, a) /= total;
    }
  }
  return p;
}

Policy random_full_support_policy(Rng& rng, int n_states, int n_actions, double floor) {
  Policy p = random_policy(rng, n_states, n_actions);
  for (int x = 0; x < n_states; ++x) {
    double total = 0.0;
    for (int a = 0; a < n_actions; ++a) total += (p(x, a) = p(x, a) + floor);
    for (int a = 0; a < n_actions; ++a) p(x, a) /= total;
  }
  return p;
}

std::vector<double> iterate_values(const TabularMdp& m, const Policy& pi, int k, double tol) {
  const double g = m.gamma[static_cast<std::size_t>(k)];
  std::vector<double> v(static_cast<std::size_t>(m.n_states), 0.0), next(v.size());
  for (int it = 0; it < 1'000'000; ++it) {
    double change = 0.0;
    for (int x = 0; x < m.n_states; ++x) {
      double acc = 0.0;
      for (int a = 0; a < m.n_actions; ++a) {
        double ev = 0.0;
        for (int y = 0; y < m.n_states; ++y) ev += m.prob(x, a, y) * v[static_cast<std::size_t>(y)];
        acc += pi(x, a) * (m.reward(k, x, a) + g * ev);
      }
      next[static_cast<std::size_t>(x)] = acc;
      change = std::max(change, std::abs(acc - v[static_cast<std::size_t>(x)]));
    }
    v.swap(next);
    if (change < tol) break;
  }
  return v;
}

std::vector<double> optimal_values(const TabularMdp& m, const std::vector<double>& w, double tol) {
  const double g = m.gamma.front();
  std::vector<double> v(static_cast<std::size_t>(m.n_states), 0.0), next(v.size());
  for (int it = 0; it < 10'000'000; ++it) {
    double change = 0.0;
    for (int x = 0; x < m.n_states; ++x) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.n_actions; ++a) {
        double r = 0.0;
        for (int k = 0; k < m.d; ++k) r += w[static_cast<std::size_t>(k)] * m.reward(k, x, a);
        double ev = 0.0;
        for (int y = 0; y < m.n_states; ++y) ev += m.prob(x, a, y) * v[static_cast<std::size_t>(y)];
        best = std::max(best, r + g * ev);
      }
      next[static_cast<std::size_t>(x)] = best;
      change = std::max(change, std::abs(best - v[static_cast<std::size_t>(x)]));
    }
    v.swap(next);
    // Contraction: the distance to the fixed point is at most change * g / (1 - g).
    if (change * g / (1.0 - g) < tol) break;
  }
  return v;
}

double truncated_return(const TabularMdp& m, const Policy& pi, int k, int horizon) {
  const double g = m.gamma[static_cast<std::size_t>(k)];
  std::vector<double> dist(static_cast<std::size_t>(m.n_states), 0.0), next(dist.size());
  dist[static_cast<std::size_t>(m.x0)] = 1.0;
  double total = 0.0, disc = 1.0;
  for (int t = 0; t < horizon; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int x = 0; x < m.n_states; ++x) {
      const double px = dist[static_cast<std::size_t>(x)];
      if (px == 0.0 || m.is_terminal(x)) continue;
      for (int a = 0; a < m.n_actions; ++a) {
        const double pxa = px * pi(x, a);
        total += disc * pxa * m.reward(k, x, a);
        for (int y = 0; y < m.n_states; ++y) next[static_cast<std::size_t>(y)] += pxa * m.prob(x, a, y);
      }
    }
    dist.swap(next);
    disc *= g;
  }
  return total;
}

std::optional<double> vertex_enumeration(const lp::LpProblem& prob, double tol) {
  const int n = static_cast<int>(prob.n_vars());
  // Rows: equalities (always tight), inequalities, and z_j >= 0 as -z_j <= 0.
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < prob.a_ub.size(); ++i) {
    rows.push_back(prob.a_ub[i]);
    rhs.push_back(prob.b_ub[i]);
  }
  for (int j = 0; j < n; ++j) {
    std::vector<double> r(static_cast<std::size_t>(n), 0.0);
    r[static_cast<std::size_t>(j)] = -1.0;
    rows.push_back(r);
    rhs.push_back(0.0);
  }
  const int n_eq = static_cast<int>(prob.a_eq.size());
  const int need = n - n_eq;
  if (need < 0) return std::nullopt;
  const int m = static_cast<int>(rows.size());

  std::optional<double> best;
  std::vector<int> pick(static_cast<std::size_t>(need));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == need) {
      Eigen::MatrixXd a(n, n);
      Eigen::VectorXd b(n);
      for (int i = 0; i < n_eq; ++i) {
        for (int j = 0; j < n; ++j) a(i, j) = prob.a_eq[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        b(i) = prob.b_eq[static_cast<std::size_t>(i)];
      }
      for (int i = 0; i < need; ++i) {
        for (int j = 0; j < n; ++j)
          a(n_eq + i, j) = rows[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])][static_cast<std::size_t>(j)];
        b(n_eq + i) = rhs[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      if (lu.rank() < n) return;
      const Eigen::VectorXd z = lu.solve(b);
      for (int i = 0; i < m; ++i) {
        double lhs = 0.0;
        for (int j = 0; j < n; ++j) lhs += rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * z(j);
        if (lhs > rhs[static_cast<std::size_t>(i)] + tol * (1.0 + std::abs(rhs[static_cast<std::size_t>(i)]))) return;
      }
      double val = 0.0;
      for (int j = 0; j < n; ++j) val += prob.objective[static_cast<std::size_t>(j)] * z(j);
      if (!best || val > *best) best = val;
      return;
    }
    for (int i = start; i < m; ++i) {
      pick[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

std::optional<double> simplex_grid_search(const std::vector<double>& q, const std::vector<std::vector<double>>& adv,
                                          const std::vector<double>& pi_b, const std::vector<double>& e, double epsilon,
                                          int resolution) {
  const std::size_t na = q.size();
  std::optional<double> best;
  std::vector<int> units(na, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == na) {
      units[i] = left;
      std::vector<double> pi(na);
      for (std::size_t a = 0; a < na; ++a) pi[a] = static_cast<double>(units[a]) / resolution;
      double budget = 0.0;
      for (std::size_t a = 0; a < na; ++a) {
        const double dev = std::abs(pi[a] - pi_b[a]);
        if (std::isinf(e[a])) {
          if (dev > 0.5 / resolution) return;  // pinned action: nearest grid point only
          continue;
        }
        budget += e[a] * dev;
      }
      if (budget > epsilon + 1e-12) return;
      for (const auto& row : adv) {
        double s = 0.0;
        for (std::size_t a = 0; a < na; ++a) s += pi[a] * row[a];
        if (s < -1e-12) return;
      }
      double val = 0.0;
      for (std::size_t a = 0; a < na; ++a) val += pi[a] * q[a];
      if (!best || val > *best) best = val;
      return;
    }
    for (int u = 0; u <= left; ++u) {
      units[i] = u;
      rec(i + 1, left - u);
    }
  };
  rec(0, resolution);
  return best;
}

std::vector<WeightedTrajectory> enumerate_trajectories(const TabularMdp& m, const Policy& pi, int horizon) {
  std::vector<WeightedTrajectory> out;
  Trajectory cur;
  std::function<void(int, double)> rec = [&](int x, double prob) {
    if (static_cast<int>(cur.steps.size()) == horizon || (m.is_terminal(x) && !cur.steps.empty())) {
      out.push_back({cur, prob});
      return;
    }
    for (int a = 0; a < m.n_actions; ++a) {
      const double pa = pi(x, a);
      if (pa == 0.0) continue;
      for (int y = 0; y < m.n_states; ++y) {
        const double py = m.prob(x, a, y);
        if (py == 0.0) continue;
        Step s{x, a, y, {}};
        for (int k = 0; k < m.d; ++k) s.r.push_back(m.reward(k, x, a));
        cur.steps.push_back(std::move(s));
        rec(y, prob * pa * py);
        cur.steps.pop_back();
      }
    }
  };
  rec(m.x0, 1.0);
  return out;
}

Counterexample scalarized_counterexample() {
  // One state, two actions, both self-looping. Action 0 pays a lot on
  // objective 0 and nothing on objective 1; action 1 pays a little on both.
  Counterexample c;
  c.mdp = TabularMdp::self_loops(1, 2, 2, 0.9);
  c.mdp.r_top = 10.0;
  c.mdp.reward(0, 0, 0) = 10.0;
  c.mdp.reward(1, 0, 0) = 0.0;
  c.mdp.reward(0, 0, 1) = 0.0;
  c.mdp.reward(1, 0, 1) = 1.0;
  c.pi_b = Policy::uniform(1, 2);
  c.pref = Preference{{1.0, 1.0}};
  return c;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace mospi::oracle
