#include "mospi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mospi/error.hpp"

namespace mospi {

namespace {

constexpr double kStochasticTol = 1e-9;
constexpr double kResidualTol = 1e-6;

std::string where(int x, int a) {
  std::ostringstream os;
  os << "(x=" << x << ", a=" << a << ")";
  return os.str();
}

}  // namespace

TabularMdp TabularMdp::self_loops(int n_states, int n_actions, int d, double gamma) {
  if (n_states <= 0 || n_actions <= 0 || d <= 0) throw InvalidInput("mdp dimensions must be positive");
  TabularMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.d = d;
  m.gamma.assign(d, gamma);
  m.p.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
  m.r.assign(static_cast<std::size_t>(d) * n_states * n_actions, 0.0);
  for (int x = 0; x < n_states; ++x)
    for (int a = 0; a < n_actions; ++a) m.prob(x, a, x) = 1.0;
  return m;
}

bool TabularMdp::is_terminal(int x) const {
  return std::find(terminal.begin(), terminal.end(), x) != terminal.end();
}

void TabularMdp::validate() const {
  if (n_states <= 0 || n_actions <= 0 || d <= 0) throw InvalidInput("mdp dimensions must be positive");
  if (p.size() != static_cast<std::size_t>(n_states) * n_actions * n_states)
    throw InvalidInput("transition tensor has wrong size");
  if (r.size() != static_cast<std::size_t>(d) * n_states * n_actions)
    throw InvalidInput("reward tensor has wrong size");
  if (gamma.size() != static_cast<std::size_t>(d)) throw InvalidInput("need one discount per objective");
  for (double g : gamma)
    if (!(g >= 0.0 && g < 1.0)) throw InvalidInput("discounts must lie in [0, 1)");
  if (x0 < 0 || x0 >= n_states) throw InvalidInput("initial state out of range");
  if (!(r_top > 0.0) || !std::isfinite(r_top)) throw InvalidInput("r_top must be positive and finite");

  for (int x = 0; x < n_states; ++x) {
    for (int a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      for (double q : next_row(x, a)) {
        if (!(q >= 0.0)) throw InvalidInput("negative transition probability at " + where(x, a));
        sum += q;
      }
      if (std::abs(sum - 1.0) > kStochasticTol) throw InvalidInput("transition row does not sum to 1 at " + where(x, a));
      for (int k = 0; k < d; ++k) {
        const double v = reward(k, x, a);
        if (!std::isfinite(v) || std::abs(v) > r_top)
          throw InvalidInput("reward exceeds r_top at " + where(x, a));
      }
    }
  }
  for (int t : terminal) {
    if (t < 0 || t >= n_states) throw InvalidInput("terminal state out of range");
    for (int a = 0; a < n_actions; ++a) {
      if (prob(t, a, t) != 1.0) throw InvalidInput("terminal state must self-loop at " + where(t, a));
      for (int k = 0; k < d; ++k)
        if (reward(k, t, a) != 0.0) throw InvalidInput("terminal state must pay zero reward at " + where(t, a));
    }
  }
}

Policy Policy::uniform(int n_states, int n_actions) {
  if (n_states <= 0 || n_actions <= 0) throw InvalidInput("policy dimensions must be positive");
  Policy pi;
  pi.n_states = n_states;
  pi.n_actions = n_actions;
  pi.probs.assign(static_cast<std::size_t>(n_states) * n_actions, 1.0 / n_actions);
  return pi;
}

Policy Policy::deterministic(std::span<const int> actions, int n_actions) {
  Policy pi;
  pi.n_states = static_cast<int>(actions.size());
  pi.n_actions = n_actions;
  pi.probs.assign(actions.size() * n_actions, 0.0);
  for (std::size_t x = 0; x < actions.size(); ++x) {
    if (actions[x] < 0 || actions[x] >= n_actions) throw InvalidInput("action index out of range");
    pi(static_cast<int>(x), actions[x]) = 1.0;
  }
  return pi;
}

void Policy::validate(double tol) const {
  if (n_states <= 0 || n_actions <= 0) throw InvalidInput("policy dimensions must be positive");
  if (probs.size() != static_cast<std::size_t>(n_states) * n_actions) throw InvalidInput("policy table has wrong size");
  for (int x = 0; x < n_states; ++x) {
    double sum = 0.0;
    for (double q : row(x)) {
      if (!(q >= 0.0)) throw InvalidInput("negative policy probability in state " + std::to_string(x));
      sum += q;
    }
    if (std::abs(sum - 1.0) > tol) throw InvalidInput("policy row does not sum to 1 in state " + std::to_string(x));
  }
}

void Policy::check_shape(const TabularMdp& mdp) const {
  if (n_states != mdp.n_states || n_actions != mdp.n_actions)
    throw InvalidInput("policy dimensions do not match the mdp");
}

void Preference::validate(int d) const {
  if (lambdas.size() != static_cast<std::size_t>(d)) throw InvalidInput("preference length must equal d");
  for (double l : lambdas)
    if (!std::isfinite(l) || l < 0.0) throw InvalidInput("preference weights must be finite and non-negative");
}

bool Preference::is_zero() const {
  return std::all_of(lambdas.begin(), lambdas.end(), [](double l) { return l == 0.0; });
}

Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const Policy& policy) {
  policy.check_shape(mdp);
  const int n = mdp.n_states;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double w = policy(x, a);
      if (w == 0.0) continue;
      auto next = mdp.next_row(x, a);
      for (int y = 0; y < n; ++y) P(x, y) += w * next[y];
    }
  return P;
}

ValueBundle policy_values(const TabularMdp& mdp, const Policy& policy) {
  policy.check_shape(mdp);
  const int n = mdp.n_states;
  const int na = mdp.n_actions;
  const Eigen::MatrixXd P = policy_transition_matrix(mdp, policy);

  ValueBundle out;
  out.d = mdp.d;
  out.v.resize(mdp.d);
  out.q.resize(mdp.d);
  out.adv.resize(mdp.d);

  // One factorization per distinct discount.
  std::map<double, Eigen::PartialPivLU<Eigen::MatrixXd>> lus;
  for (int k = 0; k < mdp.d; ++k) {
    const double g = mdp.gamma[k];
    auto it = lus.find(g);
    if (it == lus.end()) {
      Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - g * P;
      it = lus.emplace(g, Eigen::PartialPivLU<Eigen::MatrixXd>(system)).first;
    }
    Eigen::VectorXd r_pi = Eigen::VectorXd::Zero(n);
    for (int x = 0; x < n; ++x)
      for (int a = 0; a < na; ++a) r_pi[x] += policy(x, a) * mdp.reward(k, x, a);

    Eigen::VectorXd v = it->second.solve(r_pi);
    const double residual = ((v - g * P * v) - r_pi).cwiseAbs().maxCoeff();
    if (!(residual <= kResidualTol)) throw std::runtime_error("policy evaluation residual too large");

    Eigen::MatrixXd q(n, na);
    for (int x = 0; x < n; ++x)
      for (int a = 0; a < na; ++a) {
        auto next = mdp.next_row(x, a);
        double ev = 0.0;
        for (int y = 0; y < n; ++y) ev += next[y] * v[y];
        q(x, a) = mdp.reward(k, x, a) + g * ev;
      }
    out.adv[k] = q.colwise() - v;
    out.v[k] = std::move(v);
    out.q[k] = std::move(q);
  }
  return out;
}

std::vector<double> returns(const TabularMdp& mdp, const Policy& policy) {
  const ValueBundle b = policy_values(mdp, policy);
  std::vector<double> j(mdp.d);
  for (int k = 0; k < mdp.d; ++k) j[k] = b.v[k][mdp.x0];
  return j;
}

double scalarized_return(std::span<const double> j, const Preference& pref) {
  if (j.size() != pref.lambdas.size()) throw InvalidInput("preference length must equal d");
  double s = 0.0;
  for (std::size_t k = 0; k < j.size(); ++k) s += pref.lambdas[k] * j[k];
  return s;
}

ScalarizedValues scalarize(const ValueBundle& bundle, const Preference& pref) {
  pref.validate(bundle.d);
  ScalarizedValues s;
  s.v = Eigen::VectorXd::Zero(bundle.v.at(0).size());
  s.q = Eigen::MatrixXd::Zero(bundle.q.at(0).rows(), bundle.q.at(0).cols());
  for (int k = 0; k < bundle.d; ++k) {
    if (pref.lambdas[k] == 0.0) continue;
    s.v += pref.lambdas[k] * bundle.v[k];
    s.q += pref.lambdas[k] * bundle.q[k];
  }
  return s;
}

Eigen::VectorXd occupancy(const TabularMdp& mdp, const Policy& policy, int k) {
  if (k < 0 || k >= mdp.d) throw InvalidInput("objective index out of range");
  const int n = mdp.n_states;
  const double g = mdp.gamma[k];
  const Eigen::MatrixXd P = policy_transition_matrix(mdp, policy);
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - g * P.transpose();
  Eigen::VectorXd start = Eigen::VectorXd::Zero(n);
  start[mdp.x0] = 1.0 - g;
  Eigen::VectorXd rho = system.partialPivLu().solve(start);
  const double residual = (system * rho - start).cwiseAbs().maxCoeff();
  if (!(residual <= kResidualTol)) throw std::runtime_error("occupancy solve residual too large");
  return rho.cwiseMax(0.0);
}

std::vector<double> perf_diff_check(const TabularMdp& mdp, const Policy& pi, const Policy& pi_b,
                                    const ValueBundle& baseline_values) {
  pi.check_shape(mdp);
  pi_b.check_shape(mdp);
  std::vector<double> out(mdp.d);
  for (int k = 0; k < mdp.d; ++k) {
    const Eigen::VectorXd rho = occupancy(mdp, pi, k);
    double total = 0.0;
    for (int x = 0; x < mdp.n_states; ++x) {
      double inner = 0.0;
      for (int a = 0; a < mdp.n_actions; ++a) inner += pi(x, a) * baseline_values.adv[k](x, a);
      total += rho[x] * inner;
    }
    out[k] = total / (1.0 - mdp.gamma[k]);
  }
  return out;
}

double bellman_residual(const TabularMdp& mdp, const Policy& policy, const ValueBundle& bundle) {
  double worst = 0.0;
  for (int k = 0; k < mdp.d; ++k)
    for (int x = 0; x < mdp.n_states; ++x) {
      double backup = 0.0;
      for (int a = 0; a < mdp.n_actions; ++a) backup += policy(x, a) * bundle.q[k](x, a);
      worst = std::max(worst, std::abs(backup - bundle.v[k][x]));
    }
  return worst;
}

}  // namespace mospi
