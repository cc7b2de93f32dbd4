#pragma once

#include <string>
#include <vector>

#include "mospi/estimation.hpp"
#include "mospi/mdp.hpp"

namespace mospi::ope {

enum class Estimator { kIS, kPDIS, kWIS, kWPDIS, kDR, kWDR };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

bool needs_control_variate(Estimator e);
/// True when the per-trajectory values are i.i.d. samples (IS, PDIS, DR).
bool has_independent_samples(Estimator e);

struct IsEstimate {
  Estimator estimator = Estimator::kPDIS;
  int objective = 0;
  double mean = 0.0;
  /// i.i.d. per-trajectory estimates; empty for the self-normalized variants.
  std::vector<double> per_traj;
  /// Per-trajectory summands whose average is `mean`. Equal to per_traj for
  /// IS/PDIS/DR; for weighted variants they share the normalizer and are
  /// therefore dependent.
  std::vector<double> terms;
};

/// Model-based baselines V_hat, Q_hat of the target policy for DR/WDR.
struct ModelControlVariate {
  Eigen::VectorXd v_hat;
  Eigen::MatrixXd q_hat;
  std::string source;
};

/// Cumulative ratios rho_{0:t} = prod_{i<=t} pi_t(a_i|x_i) / pi_b(a_i|x_i).
std::vector<double> importance_weights(const Trajectory& traj, const Policy& pi_t, const Policy& pi_b);

IsEstimate estimate(const Dataset& dataset, const Policy& pi_t, const Policy& pi_b, int k, double gamma_k,
                    Estimator estimator, const ModelControlVariate* cv = nullptr);

ModelControlVariate build_control_variate(const TabularMdp& m_hat, const Policy& pi_t, int k);

/// Discounted return sum_t gamma^t r_{k,t} of every trajectory.
std::vector<double> discounted_returns(const Dataset& dataset, int k, double gamma_k);

/// Empirical mean discounted return (the on-policy Monte-Carlo estimate).
double on_policy_mean(const Dataset& dataset, int k, double gamma_k);

}  // namespace mospi::ope
