#include "mospi/hcpi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mospi/baselines.hpp"
#include "mospi/error.hpp"
#include "mospi/parallel.hpp"
#include "mospi/rng.hpp"
#include "mospi/stats.hpp"

namespace mospi::hcpi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_delta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidInput("confidence delta must lie in (0, 1]");
}

}  // namespace

std::string to_string(CiKind kind) { return kind == CiKind::kTTest ? "ttest" : "mpeb"; }

CiKind parse_ci(const std::string& name) {
  if (name == "ttest" || name == "t-test") return CiKind::kTTest;
  if (name == "mpeb") return CiKind::kMpeb;
  throw InvalidInput("unknown concentration inequality '" + name + "'");
}

void HcpiConfig::validate() const {
  check_delta(delta);
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw InvalidInput("split fraction must lie in (0, 1)");
  if (alpha_grid.empty()) throw InvalidInput("alpha grid must not be empty");
  for (double a : alpha_grid)
    if (!(a >= 0.0 && a < 1.0)) throw InvalidInput("alphas must lie in [0, 1)");
  if (ci.kind == CiKind::kMpeb && !(ci.c > 0.0)) throw InvalidInput("MPeB threshold c must be positive");
}

double ttest_lower_bound(std::span<const double> values, double delta) {
  check_delta(delta);
  if (values.size() < 2) throw InvalidInput("t-test bound needs at least two samples");
  const double n = static_cast<double>(values.size());
  const double m = stats::mean(values);
  const double s = stats::sample_stddev(values);
  if (s == 0.0) return m;
  if (delta >= 1.0) return kNegInf;
  return m - s / std::sqrt(n) * stats::student_t_upper_quantile(delta, n - 1.0);
}

double mpeb_lower_bound(std::span<const double> values, std::span<const double> thresholds, double delta) {
  if (!(delta > 0.0)) throw InvalidInput("confidence delta must be positive");
  const std::size_t n = values.size();
  if (n < 2) throw InvalidInput("MPeB bound needs at least two samples");
  if (thresholds.size() != n) throw InvalidInput("need one threshold per sample");
  for (double v : values)
    if (!(v >= 0.0)) throw InvalidInput("MPeB requires non-negative samples");
  for (double c : thresholds)
    if (!(c > 0.0)) throw InvalidInput("MPeB thresholds must be positive");

  std::vector<double> inv_c(n), scaled(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_c[i] = 1.0 / thresholds[i];
    scaled[i] = std::min(values[i], thresholds[i]) * inv_c[i];
  }
  const double norm = 1.0 / stats::pairwise_sum(inv_c);
  const double log_term = std::log(2.0 / delta);
  const double nd = static_cast<double>(n);

  // sum_{i,j} (z_i - z_j)^2 = 2 n sum_i (z_i - zbar)^2
  const double zbar = stats::mean(scaled);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (scaled[i] - zbar) * (scaled[i] - zbar);
  const double pair_sum = 2.0 * nd * stats::pairwise_sum(sq);

  const double first = norm * stats::pairwise_sum(scaled);
  const double second = norm * 7.0 * nd * log_term / (3.0 * nd - 1.0);
  const double third = norm * std::sqrt(log_term / (nd - 1.0) * pair_sum);
  return first - second - third;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidInput("split fraction must lie in (0, 1)");
  const std::size_t n = dataset.size();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction));
  if (n_train < 1 || n_train >= n) throw InvalidInput("split leaves one side without trajectories");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  Dataset a, b;
  a.d = b.d = dataset.d;
  for (std::size_t i : train) a.trajectories.push_back(dataset.trajectories[i]);
  for (std::size_t i : test) b.trajectories.push_back(dataset.trajectories[i]);
  return {std::move(a), std::move(b)};
}

HcpiResult h_opt(const Dataset& d_tr, const Dataset& d_s, const Policy& pi_b, const Preference& pref,
                 const TabularMdp& m_hat_tr, const HcpiConfig& cfg) {
  cfg.validate();
  pref.validate(m_hat_tr.d);
  pi_b.check_shape(m_hat_tr);
  if (d_tr.empty() || d_s.empty()) throw InvalidInput("train and safety datasets must both be non-empty");
  if (cfg.ci.kind == CiKind::kTTest && d_s.size() < 2) throw InvalidInput("t-test needs at least two safety trajectories");
  if (!ope::has_independent_samples(cfg.estimator) && !cfg.allow_dependent_samples)
    throw InvalidInput("estimator " + ope::to_string(cfg.estimator) +
                       " does not yield independent samples; the safety test refuses it");

  const int d = m_hat_tr.d;
  SafetyReport report;
  report.delta = cfg.delta;
  report.delta_per_test = cfg.delta / d;
  report.estimator = ope::to_string(cfg.estimator);
  report.ci = to_string(cfg.ci.kind);
  report.approximate_ci = cfg.ci.kind == CiKind::kTTest;

  std::vector<double> mu(d);
  for (int k = 0; k < d; ++k) mu[k] = ope::on_policy_mean(d_s, k, m_hat_tr.gamma[k]);

  const Policy pi_t = adv_linearized_improve(m_hat_tr, pi_b, pref);
  std::vector<Policy> candidates;
  for (double alpha : cfg.alpha_grid) candidates.push_back(mix(pi_t, pi_b, alpha));

  report.per_candidate.resize(candidates.size());
  parallel_for(candidates.size(), cfg.threads, [&](std::size_t ci) {
    const Policy& pi = candidates[ci];
    CandidateReport& cr = report.per_candidate[ci];
    cr.alpha = cfg.alpha_grid[ci];
    cr.thresholds = mu;
    cr.estimates.resize(d);
    cr.lower_bounds.resize(d);
    const std::optional<ValueBundle> model =
        ope::needs_control_variate(cfg.estimator) ? std::optional(policy_values(m_hat_tr, pi)) : std::nullopt;

    cr.pass = true;
    cr.train_objective = 0.0;
    for (int k = 0; k < d; ++k) {
      const double gk = m_hat_tr.gamma[k];
      std::optional<ope::ModelControlVariate> cv;
      if (model) cv = ope::ModelControlVariate{model->v[k], model->q[k], "train model"};
      const ope::ModelControlVariate* cvp = cv ? &*cv : nullptr;

      const ope::IsEstimate test = ope::estimate(d_s, pi, pi_b, k, gk, cfg.estimator, cvp);
      cr.estimates[k] = test.mean;
      const std::vector<double>& samples = test.per_traj.empty() ? test.terms : test.per_traj;
      double lb = kNegInf;
      if (cfg.ci.kind == CiKind::kTTest) {
        lb = ttest_lower_bound(samples, report.delta_per_test);
      } else {
        // Map returns into [0, 1] using the model's value range; samples
        // that still fall below 0 void the bound.
        const double shift = m_hat_tr.r_top / (1.0 - gk);
        const double scale = 2.0 * shift;
        std::vector<double> normalized(samples.size());
        bool in_range = true;
        for (std::size_t i = 0; i < samples.size(); ++i) {
          normalized[i] = (samples[i] + shift) / scale;
          in_range = in_range && normalized[i] >= 0.0;
        }
        if (in_range && samples.size() >= 2) {
          const std::vector<double> c(samples.size(), cfg.ci.c);
          lb = mpeb_lower_bound(normalized, c, report.delta_per_test) * scale - shift;
        }
      }
      cr.lower_bounds[k] = lb;
      cr.pass = cr.pass && lb >= mu[k];

      if (pref.lambdas[k] != 0.0) {
        const ope::IsEstimate train = ope::estimate(d_tr, pi, pi_b, k, gk, cfg.estimator, cvp);
        cr.train_objective += pref.lambdas[k] * train.mean;
      }
    }
  });

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const CandidateReport& cr = report.per_candidate[i];
    if (!cr.pass) continue;
    if (!best || cr.train_objective > report.per_candidate[*best].train_objective ||
        (cr.train_objective == report.per_candidate[*best].train_objective && cr.alpha < report.per_candidate[*best].alpha))
      best = i;
  }
  if (!best) return {pi_b, std::move(report)};
  report.chosen_alpha = report.per_candidate[*best].alpha;
  return {candidates[*best], std::move(report)};
}

}  // namespace mospi::hcpi
