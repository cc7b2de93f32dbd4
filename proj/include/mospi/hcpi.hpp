#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mospi/estimation.hpp"
#include "mospi/mdp.hpp"
#include "mospi/ope.hpp"

namespace mospi::hcpi {

enum class CiKind { kTTest, kMpeb };

struct CiConfig {
  CiKind kind = CiKind::kTTest;
  double c = 0.5;  // MPeB truncation threshold in normalized units
};

std::string to_string(CiKind kind);
CiKind parse_ci(const std::string& name);

struct HcpiConfig {
  double delta = 0.1;
  double split_fraction = 0.7;
  std::vector<double> alpha_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  ope::Estimator estimator = ope::Estimator::kPDIS;
  CiConfig ci;
  std::uint64_t seed = 0;
  bool allow_dependent_samples = false;
  int threads = 1;

  void validate() const;
};

struct CandidateReport {
  double alpha = 0.0;
  std::vector<double> estimates;     // IS_k(D_s)
  std::vector<double> lower_bounds;  // IS_k(D_s) - CI_k(D_s, delta / d)
  std::vector<double> thresholds;    // mu_k
  bool pass = false;
  double train_objective = 0.0;      // IS_lambda(D_tr)
};

struct SafetyReport {
  std::vector<CandidateReport> per_candidate;
  std::optional<double> chosen_alpha;
  double delta = 0.0;
  double delta_per_test = 0.0;
  std::string estimator;
  std::string ci;
  bool approximate_ci = false;
};

struct HcpiResult {
  Policy policy;
  SafetyReport report;
};

/// mean - (s / sqrt(n)) t_{1 - delta, n - 1}, s the sample standard deviation.
double ttest_lower_bound(std::span<const double> values, double delta);

/// Extended Maurer-Pontil empirical Bernstein bound on E[X] for X >= 0
/// with per-sample truncation thresholds c_i > 0.
double mpeb_lower_bound(std::span<const double> values, std::span<const double> thresholds, double delta);

/// Trajectory-level split; floor(n * fraction) trajectories go to training.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double fraction, std::uint64_t seed);

/// H-OPT: candidates (1 - alpha) pi_t + alpha pi_b with pi_t from the
/// advantage-constrained greedy policy on m_hat_tr; each must pass d safety
/// tests at delta / d on d_s. The passer with the largest IS_lambda(d_tr) is
/// returned; otherwise pi_b with no chosen alpha.
HcpiResult h_opt(const Dataset& d_tr, const Dataset& d_s, const Policy& pi_b, const Preference& pref,
                 const TabularMdp& m_hat_tr, const HcpiConfig& cfg);

}  // namespace mospi::hcpi
