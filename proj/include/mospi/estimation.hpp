#pragma once

#include <cstdint>
#include <vector>

#include "mospi/mdp.hpp"

namespace mospi {

struct Step {
  int x = 0;
  int a = 0;
  int x_next = 0;
  std::vector<double> r;
};

struct Trajectory {
  std::vector<Step> steps;
};

/// Logged trajectories, each a non-empty ordered list of transitions with
/// a length-d reward vector per step.
struct Dataset {
  int d = 0;
  std::vector<Trajectory> trajectories;

  std::size_t size() const { return trajectories.size(); }
  bool empty() const { return trajectories.empty(); }
  void validate(int n_states, int n_actions) const;
};

/// Visit tallies; a commutative monoid under `merge`.
struct Counts {
  int n_states = 0;
  int n_actions = 0;
  int d = 0;
  std::vector<std::int64_t> n_xa;   // [x][a]
  std::vector<std::int64_t> n_xax;  // [x][a][x']
  std::vector<double> r_sum;        // [k][x][a]

  Counts() = default;
  Counts(int n_states, int n_actions, int d);

  std::int64_t visits(int x, int a) const { return n_xa[static_cast<std::size_t>(x) * n_actions + a]; }
  std::int64_t transitions(int x, int a, int y) const {
    return n_xax[(static_cast<std::size_t>(x) * n_actions + a) * n_states + y];
  }
  double reward_sum(int k, int x, int a) const { return r_sum[(static_cast<std::size_t>(k) * n_states + x) * n_actions + a]; }

  void add(const Step& s);
  void merge(const Counts& other);
};

/// Shape and constants that an estimated model inherits from the environment.
struct MdpTemplate {
  int n_states = 0;
  int n_actions = 0;
  int d = 0;
  std::vector<double> gamma;
  int x0 = 0;
  double r_top = 1.0;
  std::vector<int> terminal;

  static MdpTemplate of(const TabularMdp& mdp);
};

enum class ErrorKind { kTransition, kReward };

/// Per-(x,a) uncertainty weights; +inf where the pair was never visited.
struct ErrorFunction {
  int n_states = 0;
  int n_actions = 0;
  double delta = 0.0;
  ErrorKind kind = ErrorKind::kTransition;
  std::vector<double> e;

  double at(int x, int a) const { return e[static_cast<std::size_t>(x) * n_actions + a]; }
  std::span<const double> row(int x) const {
    return {e.data() + static_cast<std::size_t>(x) * n_actions, static_cast<std::size_t>(n_actions)};
  }
};

/// delta = delta' + delta'' with delta'' = d delta' 2^-|X|, which makes the
/// transition and reward bounds coincide.
struct ConfidenceSplit {
  double transition;  // delta'
  double reward;      // delta''
};
ConfidenceSplit split_confidence(double delta, int n_states, int d);

Counts count(const Dataset& dataset, int n_states, int n_actions);

/// Maximum-likelihood model. Unvisited pairs self-loop with zero reward;
/// empirical rewards are clamped into [-r_top, r_top] and the number of
/// clamped entries is reported through `clamped` when given.
TabularMdp mle_mdp(const Counts& counts, const MdpTemplate& tmpl, std::size_t* clamped = nullptr);

/// Hoeffding error function with total confidence `delta` (split as above):
///   e_p(x,a) = sqrt(2/n log(2|X||A| 2^|X| / delta'))
///   e_r(x,a) = sqrt(2/n log(2|X||A| d / delta''))
ErrorFunction error_function(const Counts& counts, double delta, ErrorKind kind);

/// Single-count evaluations. delta'' underflows for large |X|, so the reward
/// bound takes log(delta'').
double transition_error(std::int64_t n, int n_states, int n_actions, double delta_transition);
double reward_error(std::int64_t n, int n_states, int n_actions, int d, double log_delta_reward);

Policy estimate_baseline(const Dataset& dataset, int n_states, int n_actions, double smoothing = 0.0);

}  // namespace mospi
