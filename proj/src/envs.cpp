#include "mospi/envs.hpp"

#include <algorithm>
#include <cmath>

#include "mospi/error.hpp"
#include "mospi/parallel.hpp"
#include "mospi/rng.hpp"

namespace mospi::envs {

void GridworldConfig::validate() const {
  if (size < 2) throw InvalidInput("gridworld size must be at least 2");
  if (!(eta_pit >= 0.0 && eta_pit < 1.0)) throw InvalidInput("eta_pit must lie in [0, 1)");
  if (d_pits < 1) throw InvalidInput("need at least one pit type");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("gamma must lie in [0, 1)");
  if (max_steps < 1) throw InvalidInput("max_steps must be positive");
}

Gridworld gen_gridworld(const GridworldConfig& cfg) {
  cfg.validate();
  const int n = cfg.size;
  const int cells = n * n;
  const int d = 1 + cfg.d_pits;

  Gridworld g;
  g.config = cfg;
  g.start = cells - 1;
  g.goal = 0;
  g.terminal = cells;

  TabularMdp m = TabularMdp::self_loops(cells + 1, kNumMoves, d, cfg.gamma);
  m.x0 = g.start;
  m.terminal = {g.terminal};
  m.r_top = std::max({std::abs(cfg.goal_reward), std::abs(cfg.step_reward), std::abs(cfg.pit_reward)});

  Rng rng(cfg.seed);
  for (int x = 0; x < cells; ++x) {
    const int row = x / n;
    const int col = x % n;
    for (int a = 0; a < kNumMoves; ++a) {
      const double alpha = rng.uniform();
      for (int y = 0; y <= cells; ++y) m.prob(x, a, y) = 0.0;
      if (x == g.goal) {
        m.prob(x, a, g.terminal) = 1.0;
        continue;
      }
      int r2 = row, c2 = col;
      switch (a) {
        case kUp: --r2; break;
        case kRight: ++c2; break;
        case kDown: ++r2; break;
        case kLeft: --c2; break;
      }
      const bool on_grid = r2 >= 0 && r2 < n && c2 >= 0 && c2 < n;
      const int target = on_grid ? r2 * n + c2 : x;
      m.prob(x, a, target) += alpha;
      m.prob(x, a, x) += 1.0 - alpha;
    }
  }

  g.pits.assign(cfg.d_pits, std::vector<bool>(cells, false));
  for (int i = 0; i < cfg.d_pits; ++i)
    for (int x = 0; x < cells; ++x) {
      if (x == g.goal || x == g.start) continue;
      g.pits[i][x] = rng.uniform() < cfg.eta_pit;
    }

  for (int x = 0; x < cells; ++x)
    for (int a = 0; a < kNumMoves; ++a) {
      m.reward(0, x, a) = x == g.goal ? cfg.goal_reward : cfg.step_reward;
      for (int i = 0; i < cfg.d_pits; ++i) m.reward(1 + i, x, a) = g.pits[i][x] ? cfg.pit_reward : 0.0;
    }

  m.validate();
  g.spec.mdp = std::move(m);
  g.spec.thresholds.assign(cfg.d_pits, cfg.threshold);
  g.spec.sense = ConstraintSense::kAtLeast;
  return g;
}

SolvedGridworld gen_solved_gridworld(GridworldConfig cfg, int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Gridworld world = gen_gridworld(cfg);
    CmdpSolution sol = solve_cmdp(world.spec);
    if (sol.feasible) return {std::move(world), std::move(sol.policy), attempt};
    ++cfg.seed;
  }
  throw DomainError("no feasible gridworld found within the attempt budget");
}

Policy mix_policy(const Policy& pi_star, const Policy& pi_rand, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidInput("rho must lie in [0, 1]");
  if (pi_star.n_states != pi_rand.n_states || pi_star.n_actions != pi_rand.n_actions)
    throw InvalidInput("cannot mix policies of different shapes");
  Policy out = pi_star;
  for (std::size_t i = 0; i < out.probs.size(); ++i)
    out.probs[i] = rho * pi_star.probs[i] + (1.0 - rho) * pi_rand.probs[i];
  return out;
}

void RolloutConfig::validate() const {
  if (n_trajectories < 1) throw InvalidInput("n_trajectories must be positive");
  if (max_steps < 1) throw InvalidInput("max_steps must be positive");
}

Dataset rollout(const TabularMdp& mdp, const Policy& policy, const RolloutConfig& cfg) {
  cfg.validate();
  policy.check_shape(mdp);
  if (mdp.is_terminal(mdp.x0)) throw InvalidInput("rollouts cannot start in a terminal state");

  Dataset data;
  data.d = mdp.d;
  data.trajectories.resize(cfg.n_trajectories);
  parallel_for(static_cast<std::size_t>(cfg.n_trajectories), cfg.threads, [&](std::size_t i) {
    Rng rng(cfg.seed, i);
    Trajectory& traj = data.trajectories[i];
    int x = mdp.x0;
    for (int t = 0; t < cfg.max_steps; ++t) {
      Step s;
      s.x = x;
      s.a = static_cast<int>(rng.categorical(policy.row(x)));
      s.x_next = static_cast<int>(rng.categorical(mdp.next_row(x, s.a)));
      s.r.resize(mdp.d);
      for (int k = 0; k < mdp.d; ++k) s.r[k] = mdp.reward(k, x, s.a);
      x = s.x_next;
      traj.steps.push_back(std::move(s));
      if (mdp.is_terminal(x)) break;
    }
  });
  return data;
}

}  // namespace mospi::envs
