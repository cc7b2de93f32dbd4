#pragma once

#include "mospi/mdp.hpp"

namespace mospi {

/// argmax_pi J_lambda(m_hat) by exact policy iteration on Q_lambda. Greedy
/// ties keep the current action, otherwise the lowest action index wins.
/// A zero preference makes every policy optimal; the uniform policy is returned.
Policy linearized_improve(const TabularMdp& m_hat, const Preference& pref);

/// Per-state LP maximizing <pi, Q_lambda^{pi_b}> subject to one advantage
/// constraint per objective; S-OPT without the policy-class budget.
Policy adv_linearized_improve(const TabularMdp& m_hat, const Policy& pi_b, const Preference& pref, int threads = 1);

/// Same as adv_linearized_improve but with the single scalarized constraint
/// sum_a pi(a|x) A_lambda^{pi_b}(x, a) >= 0. Not safe per objective.
Policy scalarized_constraint_improve(const TabularMdp& m_hat, const Policy& pi_b, const Preference& pref,
                                     int threads = 1);

/// Row-wise convex combination (1 - alpha) a + alpha b.
Policy mix(const Policy& a, const Policy& b, double alpha);

}  // namespace mospi
