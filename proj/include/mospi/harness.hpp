#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mospi/envs.hpp"
#include "mospi/hcpi.hpp"
#include "mospi/mdp.hpp"
#include "mospi/ope.hpp"

namespace mospi::harness {

inline constexpr int kConfigSchema = 1;

enum class MethodKind { kReturnBaseline, kLinearized, kAdvLinearized, kScalarizedConstraint, kSpibb, kHcpi };

std::string to_string(MethodKind kind);
MethodKind parse_method(const std::string& name);

/// One concrete method with its hyperparameters.
struct MethodSpec {
  MethodKind kind = MethodKind::kReturnBaseline;
  double epsilon = 0.1;  // spibb
  int iterations = 1;    // spibb
  ope::Estimator estimator = ope::Estimator::kPDIS;  // hcpi
  hcpi::CiKind ci = hcpi::CiKind::kTTest;            // hcpi
  double mpeb_c = 0.5;

  std::string name() const { return to_string(kind); }
  /// Stable hyperparameter tag used in CSV rows ("" when there are none).
  std::string hyper() const;
};

struct ExperimentConfig {
  int n_envs = 20;
  envs::GridworldConfig env;
  std::vector<int> dataset_sizes = {10, 50, 500, 2000};
  std::vector<double> rhos = {0.1, 0.4, 0.7, 0.9};
  std::vector<std::vector<double>> lambdas;
  double delta = 0.1;
  std::vector<MethodSpec> methods;
  double split_fraction = 0.7;
  std::vector<double> alpha_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::uint64_t master_seed = 0;
  int threads = 1;
  bool record_timing = false;

  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Exact evaluation of a solution against the baseline on the true model.
struct Evaluation {
  std::vector<double> j_true;
  std::vector<double> j_baseline;
  double improvement = 0.0;  // J_lambda(pi) - J_lambda(pi_b)
  bool failed = false;       // some objective below the baseline (zeta = 0)
};

/// Relative slack below which two exact evaluations count as equal.
inline constexpr double kEvalRelTol = 1e-9;

Evaluation evaluate_solution(const TabularMdp& mdp_true, const Policy& pi, const Policy& pi_b, const Preference& pref);

struct RunRecord {
  std::uint64_t env_seed = 0;
  double rho = 0.0;
  std::vector<double> lambda;
  int size = 0;
  std::string method;
  std::string hyper;
  std::vector<double> j_true;
  std::vector<double> j_baseline;
  double improvement = 0.0;
  bool failed = false;
  bool no_solution = false;  // hcpi fell back to pi_b
  double wall_ms = 0.0;
};

struct RunError {
  std::uint64_t env_seed = 0;
  double rho = 0.0;
  std::vector<double> lambda;
  int size = 0;
  std::string method;
  std::string hyper;
  std::string message;
};

struct Aggregate {
  std::string method;
  std::string hyper;
  int size = 0;
  std::optional<std::vector<double>> lambda;  // set for per-cell rows
  std::optional<double> rho;
  int n = 0;
  double mean_improvement = 0.0;
  double se_improvement = 0.0;
  double failure_rate = 0.0;
  double se_failure = 0.0;
  int no_solution = 0;
};

struct ExperimentResult {
  int d = 0;
  std::vector<std::uint64_t> env_seeds;
  int regenerations = 0;
  std::vector<RunRecord> records;
  std::vector<RunError> errors;
  std::vector<Aggregate> by_method_size;
  std::vector<Aggregate> by_cell;
};

/// Runs one solution method on a dataset drawn from pi_b.
Policy run_method(const MethodSpec& m, const Dataset& data, const TabularMdp& m_hat, const ErrorFunction& e,
                  const Policy& pi_b, const Preference& pref, const TabularMdp& tmpl_mdp, double delta,
                  double split_fraction, const std::vector<double>& alpha_grid, std::uint64_t split_seed,
                  bool* no_solution = nullptr);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Mean/SE aggregation over records, grouped per method x size and per (lambda, rho) cell.
void summarize(ExperimentResult& result);

std::string lambda_tag(const std::vector<double>& lambda);
std::string to_csv(const ExperimentResult& result);
nlohmann::json summary_json(const ExperimentResult& result);

/// Hyperparameter selection on a single environment: per (lambda, rho) and
/// method name, the hyper with the highest mean improvement among those
/// with no violations; null when every candidate violates.
nlohmann::json tune(const ExperimentConfig& cfg, int env_index = 0);

}  // namespace mospi::harness
