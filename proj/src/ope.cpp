#include "mospi/ope.hpp"

#include <algorithm>
#include <cmath>

#include "mospi/error.hpp"
#include "mospi/stats.hpp"

namespace mospi::ope {

namespace {

std::vector<double> weights_for(const Trajectory& traj, std::size_t traj_index, const Policy& pi_t,
                                const Policy& pi_b) {
  std::vector<double> w(traj.steps.size());
  double acc = 1.0;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const Step& s = traj.steps[t];
    const double pb = pi_b(s.x, s.a);
    if (!(pb > 0.0))
      throw InvalidInput("baseline assigns zero probability to the logged action at trajectory " +
                         std::to_string(traj_index) + " step " + std::to_string(t));
    acc *= pi_t(s.x, s.a) / pb;
    w[t] = acc;
  }
  return w;
}

void check_inputs(const Dataset& dataset, const Policy& pi_t, const Policy& pi_b, int k) {
  if (pi_t.n_states != pi_b.n_states || pi_t.n_actions != pi_b.n_actions)
    throw InvalidInput("target and baseline policies differ in shape");
  if (k < 0 || k >= dataset.d) throw InvalidInput("objective index out of range");
  dataset.validate(pi_b.n_states, pi_b.n_actions);
}

}  // namespace

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::kIS: return "is";
    case Estimator::kPDIS: return "pdis";
    case Estimator::kWIS: return "wis";
    case Estimator::kWPDIS: return "wpdis";
    case Estimator::kDR: return "dr";
    case Estimator::kWDR: return "wdr";
  }
  return "unknown";
}

Estimator parse_estimator(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (n == "is") return Estimator::kIS;
  if (n == "pdis") return Estimator::kPDIS;
  if (n == "wis") return Estimator::kWIS;
  if (n == "wpdis") return Estimator::kWPDIS;
  if (n == "dr") return Estimator::kDR;
  if (n == "wdr") return Estimator::kWDR;
  throw InvalidInput("unknown estimator '" + name + "'");
}

bool needs_control_variate(Estimator e) { return e == Estimator::kDR || e == Estimator::kWDR; }

bool has_independent_samples(Estimator e) {
  return e == Estimator::kIS || e == Estimator::kPDIS || e == Estimator::kDR;
}

std::vector<double> importance_weights(const Trajectory& traj, const Policy& pi_t, const Policy& pi_b) {
  return weights_for(traj, 0, pi_t, pi_b);
}

std::vector<double> discounted_returns(const Dataset& dataset, int k, double gamma_k) {
  std::vector<double> g(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    double disc = 1.0;
    double acc = 0.0;
    for (const Step& s : dataset.trajectories[i].steps) {
      acc += disc * s.r[k];
      disc *= gamma_k;
    }
    g[i] = acc;
  }
  return g;
}

double on_policy_mean(const Dataset& dataset, int k, double gamma_k) {
  return stats::mean(discounted_returns(dataset, k, gamma_k));
}

IsEstimate estimate(const Dataset& dataset, const Policy& pi_t, const Policy& pi_b, int k, double gamma_k,
                    Estimator estimator, const ModelControlVariate* cv) {
  check_inputs(dataset, pi_t, pi_b, k);
  if (dataset.empty()) throw InvalidInput("cannot estimate from an empty dataset");
  if (needs_control_variate(estimator) != (cv != nullptr))
    throw InvalidInput("a control variate is required exactly for dr and wdr");
  if (cv && (cv->v_hat.size() != pi_t.n_states || cv->q_hat.rows() != pi_t.n_states ||
             cv->q_hat.cols() != pi_t.n_actions))
    throw InvalidInput("control variate shape does not match the policies");

  const std::size_t n = dataset.size();
  std::vector<std::vector<double>> w(n);
  std::size_t horizon = 0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = weights_for(dataset.trajectories[i], i, pi_t, pi_b);
    horizon = std::max(horizon, w[i].size());
  }

  // Mean cumulative weight per time step; finished trajectories carry their
  // final weight forward.
  auto step_normalizers = [&]() {
    std::vector<double> norm(horizon, 0.0);
    std::vector<double> column(n);
    for (std::size_t t = 0; t < horizon; ++t) {
      for (std::size_t i = 0; i < n; ++i) column[i] = t < w[i].size() ? w[i][t] : w[i].back();
      norm[t] = stats::mean(column);
    }
    return norm;
  };

  IsEstimate out;
  out.estimator = estimator;
  out.objective = k;
  out.terms.assign(n, 0.0);

  switch (estimator) {
    case Estimator::kIS: {
      const std::vector<double> g = discounted_returns(dataset, k, gamma_k);
      for (std::size_t i = 0; i < n; ++i) out.terms[i] = w[i].back() * g[i];
      break;
    }
    case Estimator::kPDIS: {
      for (std::size_t i = 0; i < n; ++i) {
        double disc = 1.0;
        double acc = 0.0;
        const auto& steps = dataset.trajectories[i].steps;
        for (std::size_t t = 0; t < steps.size(); ++t) {
          acc += disc * w[i][t] * steps[t].r[k];
          disc *= gamma_k;
        }
        out.terms[i] = acc;
      }
      break;
    }
    case Estimator::kWIS: {
      const std::vector<double> g = discounted_returns(dataset, k, gamma_k);
      std::vector<double> finals(n);
      for (std::size_t i = 0; i < n; ++i) finals[i] = w[i].back();
      const double norm = stats::mean(finals);
      for (std::size_t i = 0; i < n; ++i) out.terms[i] = norm > 0.0 ? finals[i] * g[i] / norm : 0.0;
      break;
    }
    case Estimator::kWPDIS: {
      const std::vector<double> norm = step_normalizers();
      for (std::size_t i = 0; i < n; ++i) {
        double disc = 1.0;
        double acc = 0.0;
        const auto& steps = dataset.trajectories[i].steps;
        for (std::size_t t = 0; t < steps.size(); ++t) {
          if (norm[t] > 0.0) acc += disc * (w[i][t] / norm[t]) * steps[t].r[k];
          disc *= gamma_k;
        }
        out.terms[i] = acc;
      }
      break;
    }
    case Estimator::kDR:
    case Estimator::kWDR: {
      const bool weighted = estimator == Estimator::kWDR;
      const std::vector<double> norm = weighted ? step_normalizers() : std::vector<double>(horizon, 1.0);
      for (std::size_t i = 0; i < n; ++i) {
        double disc = 1.0;
        double acc = 0.0;
        double prev = 1.0;  // normalized rho_{0:t-1}, with rho_{0:-1} = 1
        const auto& steps = dataset.trajectories[i].steps;
        for (std::size_t t = 0; t < steps.size(); ++t) {
          const Step& s = steps[t];
          const double cur = norm[t] > 0.0 ? w[i][t] / norm[t] : 0.0;
          acc += disc * (cur * (s.r[k] - cv->q_hat(s.x, s.a)) + prev * cv->v_hat[s.x]);
          prev = cur;
          disc *= gamma_k;
        }
        out.terms[i] = acc;
      }
      break;
    }
  }

  out.mean = stats::mean(out.terms);
  if (has_independent_samples(estimator)) out.per_traj = out.terms;
  if (!std::isfinite(out.mean)) throw DomainError("importance-sampling estimate is not finite");
  return out;
}

ModelControlVariate build_control_variate(const TabularMdp& m_hat, const Policy& pi_t, int k) {
  if (k < 0 || k >= m_hat.d) throw InvalidInput("objective index out of range");
  const ValueBundle b = policy_values(m_hat, pi_t);
  return {b.v[k], b.q[k], "mle model"};
}

}  // namespace mospi::ope
