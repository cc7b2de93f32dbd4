#pragma once

#include <cstdint>
#include <vector>

#include "mospi/cmdp.hpp"
#include "mospi/estimation.hpp"

namespace mospi::envs {

/// Random gridworld CMDP with stochastic moves and pits.
///
/// Cells are indexed row * size + col with row 0 at the top; the agent
/// starts bottom-right and must reach the top-left goal. Every action taken
/// in the goal cell pays goal_reward on objective 0 and moves to an extra
/// absorbing terminal state. Objective i >= 1 pays pit_reward for any action
/// taken in a type-i pit.
struct GridworldConfig {
  int size = 10;
  double eta_pit = 0.3;
  int d_pits = 1;
  double goal_reward = 1000.0;
  double step_reward = -1.0;
  double pit_reward = -1.0;
  double threshold = -2.0;
  double gamma = 0.99;
  int max_steps = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

enum Move : int { kUp = 0, kRight = 1, kDown = 2, kLeft = 3 };
inline constexpr int kNumMoves = 4;

struct Gridworld {
  CmdpSpec spec;  // J_pit >= threshold constraints
  GridworldConfig config;
  int start = 0;
  int goal = 0;
  int terminal = 0;
  std::vector<std::vector<bool>> pits;  // [type][cell]
};

Gridworld gen_gridworld(const GridworldConfig& cfg);

/// A gridworld together with its constrained-optimal policy. Seeds whose
/// CMDP is infeasible are skipped by incrementing the seed.
struct SolvedGridworld {
  Gridworld world;
  Policy pi_star;
  int regenerations = 0;
};

SolvedGridworld gen_solved_gridworld(GridworldConfig cfg, int max_attempts = 100);

/// rho * pi_star + (1 - rho) * pi_rand.
Policy mix_policy(const Policy& pi_star, const Policy& pi_rand, double rho);

struct RolloutConfig {
  int n_trajectories = 1;
  int max_steps = 200;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

/// Trajectory i draws from its own stream derived from (seed, i), so the
/// dataset is independent of the thread count.
Dataset rollout(const TabularMdp& mdp, const Policy& policy, const RolloutConfig& cfg);

}  // namespace mospi::envs
