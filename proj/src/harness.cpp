#include "mospi/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mospi/baselines.hpp"
#include "mospi/error.hpp"
#include "mospi/estimation.hpp"
#include "mospi/parallel.hpp"
#include "mospi/rng.hpp"
#include "mospi/spibb.hpp"
#include "mospi/stats.hpp"

namespace mospi::harness {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t env_base_seed(std::uint64_t master, int index) {
  // Room for regenerations between neighbouring environments.
  return master + 1000ULL * static_cast<std::uint64_t>(index);
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  std::set<std::string> known(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw InvalidInput(std::string("unknown key '") + it.key() + "' in " + where);
}

std::vector<MethodSpec> expand_method(const json& j) {
  reject_unknown(j, {"name", "epsilon", "iterations", "estimator", "ci", "c"}, "method");
  MethodSpec base;
  base.kind = parse_method(j.at("name").get<std::string>());
  base.iterations = j.value("iterations", 1);
  if (j.contains("estimator")) base.estimator = ope::parse_estimator(j.at("estimator").get<std::string>());
  if (j.contains("ci")) base.ci = hcpi::parse_ci(j.at("ci").get<std::string>());
  base.mpeb_c = j.value("c", 0.5);
  if (base.kind != MethodKind::kSpibb) return {base};
  std::vector<double> eps;
  if (!j.contains("epsilon")) eps = {0.1};
  else if (j.at("epsilon").is_array()) eps = j.at("epsilon").get<std::vector<double>>();
  else eps = {j.at("epsilon").get<double>()};
  std::vector<MethodSpec> out;
  for (double e : eps) {
    MethodSpec m = base;
    m.epsilon = e;
    out.push_back(m);
  }
  return out;
}

json method_to_json(const MethodSpec& m) {
  json j{{"name", m.name()}};
  if (m.kind == MethodKind::kSpibb) {
    j["epsilon"] = m.epsilon;
    j["iterations"] = m.iterations;
  }
  if (m.kind == MethodKind::kHcpi) {
    j["estimator"] = ope::to_string(m.estimator);
    j["ci"] = hcpi::to_string(m.ci);
    if (m.ci == hcpi::CiKind::kMpeb) j["c"] = m.mpeb_c;
  }
  return j;
}

struct Matrix {
  std::vector<std::uint64_t> env_seeds;
  int regenerations = 0;
  std::vector<RunRecord> records;
  std::vector<RunError> errors;
};

Matrix run_matrix(const ExperimentConfig& cfg, const std::vector<int>& env_indices) {
  cfg.validate();
  const int threads = cfg.threads > 0 ? cfg.threads : default_threads();

  std::vector<envs::SolvedGridworld> worlds(env_indices.size());
  parallel_for(env_indices.size(), threads, [&](std::size_t i) {
    envs::GridworldConfig c = cfg.env;
    c.seed = env_base_seed(cfg.master_seed, env_indices[i]);
    worlds[i] = envs::gen_solved_gridworld(c);
  });

  const std::size_t n_rho = cfg.rhos.size(), n_size = cfg.dataset_sizes.size();
  const std::size_t n_jobs = worlds.size() * n_rho * n_size;
  std::vector<std::vector<RunRecord>> records(n_jobs);
  std::vector<std::vector<RunError>> errors(n_jobs);

  parallel_for(n_jobs, threads, [&](std::size_t job) {
    const std::size_t wi = job / (n_rho * n_size);
    const std::size_t ri = (job / n_size) % n_rho;
    const std::size_t si = job % n_size;
    const envs::SolvedGridworld& sw = worlds[wi];
    const TabularMdp& truth = sw.world.spec.mdp;
    const std::uint64_t env_seed = sw.world.config.seed;
    const double rho = cfg.rhos[ri];
    const int size = cfg.dataset_sizes[si];

    const Policy pi_b = envs::mix_policy(sw.pi_star, Policy::uniform(truth.n_states, truth.n_actions), rho);
    const std::uint64_t data_seed = derive_seed(derive_seed(env_seed, 1 + ri), si);
    envs::RolloutConfig rc{size, cfg.env.max_steps, data_seed, 1};
    const Dataset data = envs::rollout(truth, pi_b, rc);
    const Counts counts = count(data, truth.n_states, truth.n_actions);
    const TabularMdp m_hat = mle_mdp(counts, MdpTemplate::of(truth));
    const ErrorFunction e = error_function(counts, cfg.delta, ErrorKind::kTransition);

    for (const auto& lambda : cfg.lambdas) {
      const Preference pref{lambda};
      for (const MethodSpec& m : cfg.methods) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
          bool no_solution = false;
          const Policy pi = run_method(m, data, m_hat, e, pi_b, pref, truth, cfg.delta, cfg.split_fraction,
                                       cfg.alpha_grid, derive_seed(data_seed, 0x5157), &no_solution);
          const Evaluation ev = evaluate_solution(truth, pi, pi_b, pref);
          const auto t1 = std::chrono::steady_clock::now();
          RunRecord r;
          r.env_seed = env_seed;
          r.rho = rho;
          r.lambda = lambda;
          r.size = size;
          r.method = m.name();
          r.hyper = m.hyper();
          r.j_true = ev.j_true;
          r.j_baseline = ev.j_baseline;
          r.improvement = ev.improvement;
          r.failed = ev.failed;
          r.no_solution = no_solution;
          r.wall_ms = cfg.record_timing ? std::chrono::duration<double, std::milli>(t1 - t0).count() : 0.0;
          records[job].push_back(std::move(r));
        } catch (const std::exception& ex) {
          errors[job].push_back({env_seed, rho, lambda, size, m.name(), m.hyper(), ex.what()});
        }
      }
    }
  });

  Matrix out;
  for (const auto& w : worlds) {
    out.env_seeds.push_back(w.world.config.seed);
    out.regenerations += w.regenerations;
  }
  for (auto& v : records)
    for (auto& r : v) out.records.push_back(std::move(r));
  for (auto& v : errors)
    for (auto& r : v) out.errors.push_back(std::move(r));
  return out;
}

Aggregate aggregate(const std::vector<const RunRecord*>& rs) {
  Aggregate a;
  a.method = rs.front()->method;
  a.hyper = rs.front()->hyper;
  a.size = rs.front()->size;
  a.n = static_cast<int>(rs.size());
  std::vector<double> imp;
  int failures = 0;
  for (const RunRecord* r : rs) {
    imp.push_back(r->improvement);
    failures += r->failed ? 1 : 0;
    a.no_solution += r->no_solution ? 1 : 0;
  }
  const double n = static_cast<double>(a.n);
  a.mean_improvement = stats::mean(imp);
  a.se_improvement = a.n > 1 ? stats::sample_stddev(imp) / std::sqrt(n) : 0.0;
  a.failure_rate = failures / n;
  a.se_failure = std::sqrt(a.failure_rate * (1.0 - a.failure_rate) / n);
  return a;
}

json aggregate_json(const Aggregate& a) {
  json j{{"method", a.method},
         {"hyper", a.hyper},
         {"size", a.size},
         {"n", a.n},
         {"mean_improvement", a.mean_improvement},
         {"se_improvement", a.se_improvement},
         {"failure_rate", a.failure_rate},
         {"se_failure", a.se_failure},
         {"no_solution", a.no_solution}};
  if (a.lambda) j["lambda"] = *a.lambda;
  if (a.rho) j["rho"] = *a.rho;
  return j;
}

}  // namespace

std::string to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::kReturnBaseline: return "return-baseline";
    case MethodKind::kLinearized: return "linearized";
    case MethodKind::kAdvLinearized: return "adv-linearized";
    case MethodKind::kScalarizedConstraint: return "scalarized-constraint";
    case MethodKind::kSpibb: return "spibb";
    case MethodKind::kHcpi: return "hcpi";
  }
  return "?";
}

MethodKind parse_method(const std::string& name) {
  for (MethodKind k : {MethodKind::kReturnBaseline, MethodKind::kLinearized, MethodKind::kAdvLinearized,
                       MethodKind::kScalarizedConstraint, MethodKind::kSpibb, MethodKind::kHcpi})
    if (to_string(k) == name) return k;
  if (name == "s-opt") return MethodKind::kSpibb;
  if (name == "h-opt") return MethodKind::kHcpi;
  throw InvalidInput("unknown method '" + name + "'");
}

std::string MethodSpec::hyper() const {
  switch (kind) {
    case MethodKind::kSpibb:
      return "epsilon=" + fmt(epsilon) + (iterations != 1 ? ";iterations=" + std::to_string(iterations) : "");
    case MethodKind::kHcpi:
      return ope::to_string(estimator) + "+" + hcpi::to_string(ci) +
             (ci == hcpi::CiKind::kMpeb ? ";c=" + fmt(mpeb_c) : "");
    default: return "";
  }
}

void ExperimentConfig::validate() const {
  env.validate();
  if (n_envs < 1) throw InvalidInput("n_envs must be positive");
  if (dataset_sizes.empty() || rhos.empty() || lambdas.empty() || methods.empty())
    throw InvalidInput("dataset_sizes, rhos, lambdas and methods must be non-empty");
  for (int s : dataset_sizes)
    if (s < 1) throw InvalidInput("dataset sizes must be positive");
  for (double r : rhos)
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidInput("rho must lie in [0, 1]");
  const int d = 1 + env.d_pits;
  for (const auto& l : lambdas) Preference{l}.validate(d);
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidInput("delta must lie in (0, 1]");
  for (const MethodSpec& m : methods) {
    if (m.kind == MethodKind::kSpibb && !(m.epsilon >= 0.0)) throw InvalidInput("spibb epsilon must be non-negative");
    if (m.kind == MethodKind::kSpibb && m.iterations < 1) throw InvalidInput("spibb iterations must be positive");
    if (m.kind == MethodKind::kHcpi && !ope::has_independent_samples(m.estimator))
      throw InvalidInput("hcpi estimator " + ope::to_string(m.estimator) + " does not give independent samples");
  }
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw InvalidInput("split_fraction must lie in (0, 1)");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("experiment config must be a JSON object");
  reject_unknown(j,
                 {"version", "n_envs", "env", "dataset_sizes", "rhos", "lambdas", "delta", "methods", "split_fraction",
                  "alpha_grid", "master_seed", "threads", "record_timing"},
                 "experiment config");
  const int version = j.value("version", 0);
  if (version != kConfigSchema)
    throw InvalidInput("experiment config version " + std::to_string(version) + " is not supported");
  ExperimentConfig c;
  c.n_envs = j.value("n_envs", c.n_envs);
  if (j.contains("env")) {
    const json& e = j.at("env");
    reject_unknown(e, {"size", "eta_pit", "d_pits", "goal_reward", "step_reward", "pit_reward", "threshold", "gamma",
                       "max_steps"},
                   "env");
    c.env.size = e.value("size", c.env.size);
    c.env.eta_pit = e.value("eta_pit", c.env.eta_pit);
    c.env.d_pits = e.value("d_pits", c.env.d_pits);
    c.env.goal_reward = e.value("goal_reward", c.env.goal_reward);
    c.env.step_reward = e.value("step_reward", c.env.step_reward);
    c.env.pit_reward = e.value("pit_reward", c.env.pit_reward);
    c.env.threshold = e.value("threshold", c.env.threshold);
    c.env.gamma = e.value("gamma", c.env.gamma);
    c.env.max_steps = e.value("max_steps", c.env.max_steps);
  }
  c.dataset_sizes = j.value("dataset_sizes", c.dataset_sizes);
  c.rhos = j.value("rhos", c.rhos);
  c.lambdas = j.at("lambdas").get<std::vector<std::vector<double>>>();
  c.delta = j.value("delta", c.delta);
  for (const json& m : j.at("methods"))
    for (MethodSpec& s : expand_method(m)) c.methods.push_back(s);
  c.split_fraction = j.value("split_fraction", c.split_fraction);
  c.alpha_grid = j.value("alpha_grid", c.alpha_grid);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.threads = j.value("threads", c.threads);
  c.record_timing = j.value("record_timing", c.record_timing);
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json methods_j = json::array();
  for (const MethodSpec& m : methods) methods_j.push_back(method_to_json(m));
  return json{{"version", kConfigSchema},
              {"n_envs", n_envs},
              {"env",
               {{"size", env.size},
                {"eta_pit", env.eta_pit},
                {"d_pits", env.d_pits},
                {"goal_reward", env.goal_reward},
                {"step_reward", env.step_reward},
                {"pit_reward", env.pit_reward},
                {"threshold", env.threshold},
                {"gamma", env.gamma},
                {"max_steps", env.max_steps}}},
              {"dataset_sizes", dataset_sizes},
              {"rhos", rhos},
              {"lambdas", lambdas},
              {"delta", delta},
              {"methods", methods_j},
              {"split_fraction", split_fraction},
              {"alpha_grid", alpha_grid},
              {"master_seed", master_seed},
              {"threads", threads},
              {"record_timing", record_timing}};
}

Evaluation evaluate_solution(const TabularMdp& mdp_true, const Policy& pi, const Policy& pi_b, const Preference& pref) {
  Evaluation ev;
  ev.j_true = returns(mdp_true, pi);
  ev.j_baseline = returns(mdp_true, pi_b);
  ev.improvement = scalarized_return(ev.j_true, pref) - scalarized_return(ev.j_baseline, pref);
  for (std::size_t k = 0; k < ev.j_true.size(); ++k) {
    const double slack = kEvalRelTol * std::max(1.0, std::abs(ev.j_baseline[k]));
    if (ev.j_true[k] < ev.j_baseline[k] - slack) ev.failed = true;
  }
  return ev;
}

Policy run_method(const MethodSpec& m, const Dataset& data, const TabularMdp& m_hat, const ErrorFunction& e,
                  const Policy& pi_b, const Preference& pref, const TabularMdp& tmpl_mdp, double delta,
                  double split_fraction, const std::vector<double>& alpha_grid, std::uint64_t split_seed,
                  bool* no_solution) {
  if (no_solution) *no_solution = false;
  switch (m.kind) {
    case MethodKind::kReturnBaseline: return pi_b;
    case MethodKind::kLinearized: return linearized_improve(m_hat, pref);
    case MethodKind::kAdvLinearized: return adv_linearized_improve(m_hat, pi_b, pref);
    case MethodKind::kScalarizedConstraint: return scalarized_constraint_improve(m_hat, pi_b, pref);
    case MethodKind::kSpibb: {
      spibb::SpibbConfig sc;
      sc.epsilon = m.epsilon;
      sc.delta = delta;
      sc.iterations = m.iterations;
      return spibb::improve(m_hat, pi_b, pref, e, sc);
    }
    case MethodKind::kHcpi: {
      hcpi::HcpiConfig hc;
      hc.delta = delta;
      hc.split_fraction = split_fraction;
      hc.alpha_grid = alpha_grid;
      hc.estimator = m.estimator;
      hc.ci = {m.ci, m.mpeb_c};
      hc.seed = split_seed;
      auto [d_tr, d_s] = hcpi::split(data, split_fraction, split_seed);
      const TabularMdp m_tr =
          mle_mdp(count(d_tr, tmpl_mdp.n_states, tmpl_mdp.n_actions), MdpTemplate::of(tmpl_mdp));
      hcpi::HcpiResult res = hcpi::h_opt(d_tr, d_s, pi_b, pref, m_tr, hc);
      if (no_solution) *no_solution = !res.report.chosen_alpha.has_value();
      return std::move(res.policy);
    }
  }
  throw InvalidInput("unhandled method");
}

void summarize(ExperimentResult& result) {
  using Key = std::tuple<std::string, std::string, int>;
  std::map<Key, std::vector<const RunRecord*>> by_ms;
  std::map<std::tuple<std::string, std::string, int, std::vector<double>, double>, std::vector<const RunRecord*>> by_cell;
  for (const RunRecord& r : result.records) {
    by_ms[{r.method, r.hyper, r.size}].push_back(&r);
    by_cell[{r.method, r.hyper, r.size, r.lambda, r.rho}].push_back(&r);
  }
  result.by_method_size.clear();
  result.by_cell.clear();
  for (const auto& [k, rs] : by_ms) result.by_method_size.push_back(aggregate(rs));
  for (const auto& [k, rs] : by_cell) {
    Aggregate a = aggregate(rs);
    a.lambda = std::get<3>(k);
    a.rho = std::get<4>(k);
    result.by_cell.push_back(std::move(a));
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  std::vector<int> idx(static_cast<std::size_t>(cfg.n_envs));
  for (int i = 0; i < cfg.n_envs; ++i) idx[static_cast<std::size_t>(i)] = i;
  Matrix m = run_matrix(cfg, idx);
  ExperimentResult r;
  r.d = 1 + cfg.env.d_pits;
  r.env_seeds = std::move(m.env_seeds);
  r.regenerations = m.regenerations;
  r.records = std::move(m.records);
  r.errors = std::move(m.errors);
  summarize(r);
  return r;
}

std::string lambda_tag(const std::vector<double>& lambda) {
  std::string s;
  for (std::size_t i = 0; i < lambda.size(); ++i) s += (i ? ";" : "") + fmt(lambda[i]);
  return s;
}

std::string to_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "env_seed,rho,lambda,size,method,hyper";
  for (int k = 0; k < result.d; ++k) out << ",j" << k << "_true";
  for (int k = 0; k < result.d; ++k) out << ",j" << k << "_base";
  out << ",improvement,failed,wall_ms\n";
  for (const RunRecord& r : result.records) {
    out << r.env_seed << ',' << fmt(r.rho) << ',' << lambda_tag(r.lambda) << ',' << r.size << ',' << r.method << ','
        << r.hyper;
    for (double v : r.j_true) out << ',' << fmt(v);
    for (double v : r.j_baseline) out << ',' << fmt(v);
    out << ',' << fmt(r.improvement) << ',' << (r.failed ? 1 : 0) << ',' << fmt(r.wall_ms) << '\n';
  }
  return out.str();
}

json summary_json(const ExperimentResult& result) {
  json ms = json::array(), cells = json::array(), errs = json::array();
  for (const Aggregate& a : result.by_method_size) ms.push_back(aggregate_json(a));
  for (const Aggregate& a : result.by_cell) cells.push_back(aggregate_json(a));
  for (const RunError& e : result.errors)
    errs.push_back(json{{"env_seed", e.env_seed},
                        {"rho", e.rho},
                        {"lambda", e.lambda},
                        {"size", e.size},
                        {"method", e.method},
                        {"hyper", e.hyper},
                        {"message", e.message}});
  return json{{"version", 1},
              {"d", result.d},
              {"n_runs", result.records.size()},
              {"env_seeds", result.env_seeds},
              {"regenerations", result.regenerations},
              {"by_method_size", ms},
              {"by_cell", cells},
              {"errors", errs}};
}

json tune(const ExperimentConfig& cfg, int env_index) {
  if (env_index < 0) throw InvalidInput("tuning environment index must be non-negative");
  const Matrix m = run_matrix(cfg, {env_index});

  struct Tally {
    double sum = 0.0;
    int n = 0;
    int failures = 0;
  };
  // (lambda, rho, method) -> hyper -> tally, hypers kept in config order
  std::map<std::tuple<std::vector<double>, double, std::string>, std::vector<std::pair<std::string, Tally>>> groups;
  for (const RunRecord& r : m.records) {
    auto& hypers = groups[{r.lambda, r.rho, r.method}];
    auto it = std::find_if(hypers.begin(), hypers.end(), [&](const auto& h) { return h.first == r.hyper; });
    if (it == hypers.end()) {
      hypers.emplace_back(r.hyper, Tally{});
      it = std::prev(hypers.end());
    }
    it->second.sum += r.improvement;
    it->second.n += 1;
    it->second.failures += r.failed ? 1 : 0;
  }

  json selections = json::array();
  for (const auto& [key, hypers] : groups) {
    const auto& [lambda, rho, method] = key;
    const std::pair<std::string, Tally>* best = nullptr;
    json candidates = json::array();
    for (const auto& h : hypers) {
      const double mean = h.second.sum / h.second.n;
      candidates.push_back(
          json{{"hyper", h.first}, {"mean_improvement", mean}, {"violations", h.second.failures}, {"n", h.second.n}});
      if (h.second.failures > 0) continue;
      if (!best || mean > best->second.sum / best->second.n) best = &h;
    }
    selections.push_back(json{{"lambda", lambda},
                              {"rho", rho},
                              {"method", method},
                              {"chosen", best ? json(best->first) : json(nullptr)},
                              {"candidates", candidates}});
  }
  return json{{"version", 1}, {"env_seed", m.env_seeds.front()}, {"selections", selections}};
}

}  // namespace mospi::harness
