#include "mospi/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mospi/error.hpp"

namespace mospi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_confidence(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidInput("confidence delta must lie in (0, 1]");
}

}  // namespace

void Dataset::validate(int n_states, int n_actions) const {
  if (d <= 0) throw InvalidInput("dataset reward dimension must be positive");
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& steps = trajectories[i].steps;
    if (steps.empty()) throw InvalidInput("trajectory " + std::to_string(i) + " is empty");
    for (std::size_t t = 0; t < steps.size(); ++t) {
      const Step& s = steps[t];
      const std::string at = "trajectory " + std::to_string(i) + " step " + std::to_string(t);
      if (s.x < 0 || s.x >= n_states || s.x_next < 0 || s.x_next >= n_states)
        throw InvalidInput("state index out of range at " + at);
      if (s.a < 0 || s.a >= n_actions) throw InvalidInput("action index out of range at " + at);
      if (s.r.size() != static_cast<std::size_t>(d)) throw InvalidInput("reward vector length mismatch at " + at);
    }
  }
}

Counts::Counts(int n_states_, int n_actions_, int d_)
    : n_states(n_states_),
      n_actions(n_actions_),
      d(d_),
      n_xa(static_cast<std::size_t>(n_states_) * n_actions_, 0),
      n_xax(static_cast<std::size_t>(n_states_) * n_actions_ * n_states_, 0),
      r_sum(static_cast<std::size_t>(d_) * n_states_ * n_actions_, 0.0) {}

void Counts::add(const Step& s) {
  n_xa[static_cast<std::size_t>(s.x) * n_actions + s.a] += 1;
  n_xax[(static_cast<std::size_t>(s.x) * n_actions + s.a) * n_states + s.x_next] += 1;
  for (int k = 0; k < d; ++k) r_sum[(static_cast<std::size_t>(k) * n_states + s.x) * n_actions + s.a] += s.r[k];
}

void Counts::merge(const Counts& other) {
  if (other.n_states != n_states || other.n_actions != n_actions || other.d != d)
    throw InvalidInput("cannot merge counts of different shapes");
  for (std::size_t i = 0; i < n_xa.size(); ++i) n_xa[i] += other.n_xa[i];
  for (std::size_t i = 0; i < n_xax.size(); ++i) n_xax[i] += other.n_xax[i];
  for (std::size_t i = 0; i < r_sum.size(); ++i) r_sum[i] += other.r_sum[i];
}

MdpTemplate MdpTemplate::of(const TabularMdp& mdp) {
  return {mdp.n_states, mdp.n_actions, mdp.d, mdp.gamma, mdp.x0, mdp.r_top, mdp.terminal};
}

ConfidenceSplit split_confidence(double delta, int n_states, int d) {
  check_confidence(delta);
  const double tail = d * std::exp2(-static_cast<double>(n_states));
  const double dp = delta / (1.0 + tail);
  return {dp, dp * tail};
}

Counts count(const Dataset& dataset, int n_states, int n_actions) {
  dataset.validate(n_states, n_actions);
  Counts c(n_states, n_actions, dataset.d);
  for (const auto& traj : dataset.trajectories)
    for (const auto& s : traj.steps) c.add(s);
  return c;
}

TabularMdp mle_mdp(const Counts& counts, const MdpTemplate& tmpl, std::size_t* clamped) {
  if (counts.n_states != tmpl.n_states || counts.n_actions != tmpl.n_actions || counts.d != tmpl.d)
    throw InvalidInput("counts do not match the model template");
  TabularMdp m = TabularMdp::self_loops(tmpl.n_states, tmpl.n_actions, tmpl.d, 0.0);
  m.gamma = tmpl.gamma;
  m.x0 = tmpl.x0;
  m.r_top = tmpl.r_top;

  std::size_t n_clamped = 0;
  for (int x = 0; x < m.n_states; ++x) {
    for (int a = 0; a < m.n_actions; ++a) {
      const std::int64_t n = counts.visits(x, a);
      if (n == 0) continue;
      for (int y = 0; y < m.n_states; ++y)
        m.prob(x, a, y) = static_cast<double>(counts.transitions(x, a, y)) / static_cast<double>(n);
      for (int k = 0; k < m.d; ++k) {
        const double mean = counts.reward_sum(k, x, a) / static_cast<double>(n);
        const double bounded = std::clamp(mean, -m.r_top, m.r_top);
        if (bounded != mean) ++n_clamped;
        m.reward(k, x, a) = bounded;
      }
    }
  }
  // A template terminal stays terminal only while no logged step leaves it.
  for (int t : tmpl.terminal) {
    bool visited = false;
    for (int a = 0; a < m.n_actions; ++a) visited = visited || counts.visits(t, a) > 0;
    if (!visited) m.terminal.push_back(t);
  }
  if (clamped) *clamped = n_clamped;
  return m;
}

double transition_error(std::int64_t n, int n_states, int n_actions, double delta_transition) {
  if (n <= 0) return kInf;
  const double log_factor = std::log(2.0 * n_states * n_actions) + n_states * std::numbers::ln2 -
                            std::log(delta_transition);
  return std::sqrt(2.0 / static_cast<double>(n) * log_factor);
}

double reward_error(std::int64_t n, int n_states, int n_actions, int d, double log_delta_reward) {
  if (n <= 0) return kInf;
  const double log_factor = std::log(2.0 * n_states * n_actions * d) - log_delta_reward;
  return std::sqrt(2.0 / static_cast<double>(n) * log_factor);
}

ErrorFunction error_function(const Counts& counts, double delta, ErrorKind kind) {
  check_confidence(delta);
  const ConfidenceSplit split = split_confidence(delta, counts.n_states, counts.d);
  const double log_delta_reward =
      std::log(static_cast<double>(counts.d)) + std::log(split.transition) - counts.n_states * std::numbers::ln2;

  ErrorFunction ef;
  ef.n_states = counts.n_states;
  ef.n_actions = counts.n_actions;
  ef.delta = delta;
  ef.kind = kind;
  ef.e.resize(static_cast<std::size_t>(counts.n_states) * counts.n_actions);
  for (int x = 0; x < counts.n_states; ++x)
    for (int a = 0; a < counts.n_actions; ++a) {
      const std::int64_t n = counts.visits(x, a);
      ef.e[static_cast<std::size_t>(x) * counts.n_actions + a] =
          kind == ErrorKind::kTransition
              ? transition_error(n, counts.n_states, counts.n_actions, split.transition)
              : reward_error(n, counts.n_states, counts.n_actions, counts.d, log_delta_reward);
    }
  return ef;
}

Policy estimate_baseline(const Dataset& dataset, int n_states, int n_actions, double smoothing) {
  if (!(smoothing >= 0.0)) throw InvalidInput("smoothing must be non-negative");
  const Counts c = count(dataset, n_states, n_actions);
  Policy pi = Policy::uniform(n_states, n_actions);
  for (int x = 0; x < n_states; ++x) {
    double total = 0.0;
    for (int a = 0; a < n_actions; ++a) total += static_cast<double>(c.visits(x, a)) + smoothing;
    if (total <= 0.0) continue;
    for (int a = 0; a < n_actions; ++a) pi(x, a) = (static_cast<double>(c.visits(x, a)) + smoothing) / total;
  }
  return pi;
}

}  // namespace mospi
