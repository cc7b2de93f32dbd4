#pragma once

#include <span>
#include <vector>

#include "mospi/estimation.hpp"
#include "mospi/mdp.hpp"

namespace mospi::spibb {

struct SpibbConfig {
  double epsilon = 0.1;
  double delta = 0.1;
  int iterations = 1;
  double tol = 0.0;
  int threads = 1;

  void validate() const;
};

/// Per-state S-OPT: maximize <pi, Q_lambda^{pi_b}(x, .)> over pi with the
/// weighted-L1 budget sum_a e(x,a)|pi - pi_b| <= epsilon and one advantage
/// constraint sum_a pi(a) A_k^{pi_b}(x, a) >= 0 per objective.
std::vector<double> s_opt_state(int x, std::span<const double> q_lambda_row,
                                const std::vector<std::vector<double>>& adv_rows, std::span<const double> pi_b_row,
                                std::span<const double> e_row, double epsilon, double tol = 0.0);

/// MO-SPIBB policy improvement on the MLE model. Advantages and the budget
/// are always anchored to pi_b; extra sweeps only refresh the objective.
Policy improve(const TabularMdp& m_hat, const Policy& pi_b, const Preference& pref, const ErrorFunction& e,
               const SpibbConfig& cfg);

/// Worst-case per-state loss on each objective: epsilon r_top / (1 - gamma)^2.
double improvement_gap_bound(double epsilon, double gamma, double r_top);

}  // namespace mospi::spibb
