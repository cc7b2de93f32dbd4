#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <optional>
#include <ostream>

#include "mospi/baselines.hpp"
#include "mospi/cmdp.hpp"
#include "mospi/envs.hpp"
#include "mospi/error.hpp"
#include "mospi/estimation.hpp"
#include "mospi/harness.hpp"
#include "mospi/hcpi.hpp"
#include "mospi/io.hpp"
#include "mospi/ope.hpp"
#include "mospi/spibb.hpp"

namespace mospi::cli {

namespace {

using io::json;

// Distinguishes "hcpi found nothing" from real failures.
struct NoSolution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_lambda(const std::vector<double>& lambda, int d) {
  if (lambda.empty()) throw InvalidInput("--lambda is required");
  Preference{lambda}.validate(d);
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

struct Args {
  // shared
  std::string mdp, policy, baseline, dataset, errors, out, report, summary, config, template_mdp, target, counts;
  std::string sense, kind = "transition", estimator = "pdis", ci = "ttest", baseline_out;
  std::vector<double> lambda, thresholds;
  double epsilon = 0.1, delta = 0.1, split = 0.7, rho = 0.0, c = 0.5, smoothing = 0.0, gamma = std::nan("");
  int iterations = 1, n = 0, max_steps = 200, k = 0, threads = 1, tune_env = -1;
  std::uint64_t seed = 0;
  bool allow_dependent = false, tune = false;
  envs::GridworldConfig env;
};

void cmd_gen_env(const Args& a, std::ostream& out) {
  envs::Gridworld w = envs::gen_gridworld(a.env);
  json j = io::to_json(w.spec.mdp);
  j["constraints"] = io::to_json(io::ConstraintBlock{w.spec.sense, w.spec.thresholds});
  io::write_json(a.out, j);
  emit(out, json{{"out", a.out}, {"n_states", w.spec.mdp.n_states}, {"start", w.start}, {"goal", w.goal}});
}

void cmd_solve_cmdp(const Args& a, std::ostream& out) {
  const json doc = io::read_json(a.mdp);
  CmdpSpec spec;
  spec.mdp = io::read_mdp(a.mdp);
  const std::optional<io::ConstraintBlock> block = [&] {
    try {
      return io::constraints_from_json(doc);
    } catch (const std::exception& e) {
      throw IoError("invalid constraints in '" + a.mdp + "': " + e.what(), a.mdp);
    }
  }();
  spec.sense = block ? block->sense : ConstraintSense::kAtMost;
  if (!a.sense.empty()) spec.sense = io::parse_sense(a.sense);
  if (!a.thresholds.empty()) spec.thresholds = a.thresholds;
  else if (block) spec.thresholds = block->thresholds;
  if (spec.thresholds.size() == 1 && spec.mdp.d > 2) spec.thresholds.assign(spec.mdp.d - 1, spec.thresholds[0]);
  const CmdpSolution sol = solve_cmdp(spec);
  if (!sol.feasible) throw DomainError("no feasible policy for the constrained MDP");
  io::write_json(a.out, io::to_json(sol.policy));
  emit(out, json{{"out", a.out}, {"objective", sol.objective}, {"returns", returns_from(spec.mdp, sol.policy, spec.initial_distribution())}});
}

void cmd_mix(const Args& a, std::ostream& out) {
  const Policy pi_star = io::read_policy(a.policy);
  const Policy pi_b = envs::mix_policy(pi_star, Policy::uniform(pi_star.n_states, pi_star.n_actions), a.rho);
  io::write_json(a.out, io::to_json(pi_b));
  emit(out, json{{"out", a.out}, {"rho", a.rho}});
}

void cmd_rollout(const Args& a, std::ostream& out) {
  const TabularMdp mdp = io::read_mdp(a.mdp);
  const Policy pi = io::read_policy(a.policy);
  pi.check_shape(mdp);
  const Dataset ds = envs::rollout(mdp, pi, {a.n, a.max_steps, a.seed, a.threads});
  io::write_dataset(a.out, ds);
  std::size_t steps = 0;
  for (const auto& t : ds.trajectories) steps += t.steps.size();
  emit(out, json{{"out", a.out}, {"trajectories", ds.size()}, {"steps", steps}});
}

void cmd_estimate(const Args& a, std::ostream& out) {
  const TabularMdp tmpl = io::read_mdp(a.template_mdp);
  const Dataset ds = io::read_dataset(a.dataset);
  ds.validate(tmpl.n_states, tmpl.n_actions);
  if (ds.d != tmpl.d) throw InvalidInput("dataset reward dimension differs from the template");
  const Counts c = count(ds, tmpl.n_states, tmpl.n_actions);
  std::size_t clamped = 0;
  const TabularMdp m_hat = mle_mdp(c, MdpTemplate::of(tmpl), &clamped);
  io::write_json(a.out, io::to_json(m_hat));
  json info{{"out", a.out}, {"clamped_rewards", clamped}};
  if (!a.errors.empty()) {
    const ErrorKind kind = a.kind == "reward" ? ErrorKind::kReward : ErrorKind::kTransition;
    if (a.kind != "reward" && a.kind != "transition") throw InvalidInput("--kind must be transition or reward");
    io::write_json(a.errors, io::to_json(error_function(c, a.delta, kind)));
    info["errors"] = a.errors;
  }
  if (!a.counts.empty()) {
    io::write_json(a.counts, io::to_json(c));
    info["counts"] = a.counts;
  }
  if (!a.baseline_out.empty()) {
    io::write_json(a.baseline_out, io::to_json(estimate_baseline(ds, tmpl.n_states, tmpl.n_actions, a.smoothing)));
    info["baseline"] = a.baseline_out;
  }
  emit(out, info);
}

void cmd_improve(const std::string& method, const Args& a, std::ostream& out) {
  Policy pi;
  json info{{"method", method}, {"out", a.out}};
  if (method == "hcpi") {
    const TabularMdp tmpl = io::read_mdp(a.template_mdp);
    const Dataset ds = io::read_dataset(a.dataset);
    const Policy pi_b = io::read_policy(a.baseline);
    ds.validate(tmpl.n_states, tmpl.n_actions);
    pi_b.check_shape(tmpl);
    check_lambda(a.lambda, tmpl.d);
    hcpi::HcpiConfig cfg;
    cfg.delta = a.delta;
    cfg.split_fraction = a.split;
    cfg.estimator = ope::parse_estimator(a.estimator);
    cfg.ci = {hcpi::parse_ci(a.ci), a.c};
    cfg.seed = a.seed;
    cfg.allow_dependent_samples = a.allow_dependent;
    cfg.threads = a.threads;
    auto [d_tr, d_s] = hcpi::split(ds, cfg.split_fraction, cfg.seed);
    const TabularMdp m_tr = mle_mdp(count(d_tr, tmpl.n_states, tmpl.n_actions), MdpTemplate::of(tmpl));
    hcpi::HcpiResult res = hcpi::h_opt(d_tr, d_s, pi_b, Preference{a.lambda}, m_tr, cfg);
    io::write_json(a.out, io::to_json(res.policy));
    if (!a.report.empty()) io::write_json(a.report, io::to_json(res.report));
    info["chosen_alpha"] = res.report.chosen_alpha ? json(*res.report.chosen_alpha) : json(nullptr);
    emit(out, info);
    if (!res.report.chosen_alpha) throw NoSolution("no candidate passed the safety test; baseline written");
    return;
  }

  const TabularMdp m_hat = io::read_mdp(a.mdp);
  check_lambda(a.lambda, m_hat.d);
  const Preference pref{a.lambda};
  if (method == "linearized") {
    pi = linearized_improve(m_hat, pref);
  } else {
    const Policy pi_b = io::read_policy(a.baseline);
    pi_b.check_shape(m_hat);
    if (method == "adv-linearized") {
      pi = adv_linearized_improve(m_hat, pi_b, pref, a.threads);
    } else if (method == "scalarized-constraint") {
      pi = scalarized_constraint_improve(m_hat, pi_b, pref, a.threads);
    } else {
      const ErrorFunction e = io::read_error_function(a.errors);
      spibb::SpibbConfig cfg;
      cfg.epsilon = a.epsilon;
      cfg.delta = a.delta;
      cfg.iterations = a.iterations;
      cfg.threads = a.threads;
      pi = spibb::improve(m_hat, pi_b, pref, e, cfg);
    }
  }
  io::write_json(a.out, io::to_json(pi));
  info["returns_on_model"] = returns(m_hat, pi);
  emit(out, info);
}

void cmd_ope(const Args& a, std::ostream& out) {
  const Dataset ds = io::read_dataset(a.dataset);
  const Policy pi_t = io::read_policy(a.target);
  const Policy pi_b = io::read_policy(a.baseline);
  const ope::Estimator est = ope::parse_estimator(a.estimator);
  std::optional<TabularMdp> m_hat;
  if (!a.mdp.empty()) m_hat = io::read_mdp(a.mdp);
  ds.validate(pi_b.n_states, pi_b.n_actions);
  if (a.k < 0 || a.k >= ds.d) throw InvalidInput("--k out of range");
  double gamma = a.gamma;
  if (std::isnan(gamma)) {
    if (!m_hat) throw InvalidInput("--gamma or --mdp is required");
    gamma = m_hat->gamma[static_cast<std::size_t>(a.k)];
  }
  std::optional<ope::ModelControlVariate> cv;
  if (ope::needs_control_variate(est)) {
    if (!m_hat) throw InvalidInput("estimator " + a.estimator + " needs --mdp for its control variate");
    cv = ope::build_control_variate(*m_hat, pi_t, a.k);
  }
  const ope::IsEstimate r = ope::estimate(ds, pi_t, pi_b, a.k, gamma, est, cv ? &*cv : nullptr);
  emit(out, json{{"estimator", ope::to_string(est)}, {"k", a.k}, {"gamma", gamma}, {"estimate", r.mean}, {"n", ds.size()}});
}

void cmd_evaluate(const Args& a, std::ostream& out) {
  const TabularMdp mdp = io::read_mdp(a.mdp);
  const Policy pi = io::read_policy(a.policy);
  const Policy pi_b = io::read_policy(a.baseline);
  pi.check_shape(mdp);
  pi_b.check_shape(mdp);
  std::vector<double> lambda = a.lambda;
  if (lambda.empty()) lambda.assign(static_cast<std::size_t>(mdp.d), 1.0);
  check_lambda(lambda, mdp.d);
  const harness::Evaluation ev = harness::evaluate_solution(mdp, pi, pi_b, Preference{lambda});
  const json j{{"lambda", lambda},       {"j_true", ev.j_true},   {"j_baseline", ev.j_baseline},
               {"improvement", ev.improvement}, {"failed", ev.failed}};
  if (!a.out.empty()) io::write_json(a.out, j);
  emit(out, j);
}

void cmd_experiment(const Args& a, bool ex_threads_given, std::ostream& out) {
  const json doc = io::read_json(a.config);
  harness::ExperimentConfig cfg = [&] {
    try {
      return harness::ExperimentConfig::from_json(doc);
    } catch (const std::exception& e) {
      throw IoError("invalid config '" + a.config + "': " + e.what(), a.config);
    }
  }();
  if (ex_threads_given) cfg.threads = a.threads;
  if (a.tune) {
    const json t = harness::tune(cfg, a.tune_env < 0 ? 0 : a.tune_env);
    if (!a.out.empty()) io::write_json(a.out, t);
    emit(out, t);
    return;
  }
  const harness::ExperimentResult res = harness::run_experiment(cfg);
  io::write_text(a.out, harness::to_csv(res));
  if (!a.summary.empty()) io::write_json(a.summary, harness::summary_json(res));
  emit(out, json{{"out", a.out}, {"runs", res.records.size()}, {"errors", res.errors.size()}});
}

json error_json(const char* kind, const std::string& message, const std::string& path = "") {
  json j{{"error", kind}, {"message", message}};
  if (!path.empty()) j["path"] = path;
  return j;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-objective safe policy improvement toolkit", "mospi"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print artifact schema versions");
  Args a;

  auto* gen = app.add_subcommand("gen-env", "Generate a random gridworld CMDP");
  gen->add_option("--size", a.env.size)->capture_default_str();
  gen->add_option("--eta-pit", a.env.eta_pit)->capture_default_str();
  gen->add_option("--pits", a.env.d_pits)->capture_default_str();
  gen->add_option("--threshold", a.env.threshold)->capture_default_str();
  gen->add_option("--gamma", a.env.gamma)->capture_default_str();
  gen->add_option("--seed", a.env.seed)->capture_default_str();
  gen->add_option("--out", a.out)->required();

  auto* solve = app.add_subcommand("solve-cmdp", "Solve the occupancy LP of a constrained MDP");
  solve->add_option("--mdp", a.mdp)->required();
  solve->add_option("--thresholds", a.thresholds)->delimiter(',')->allow_extra_args(false);
  solve->add_option("--sense", a.sense, "at-most or at-least (default: from file, else at-most)");
  solve->add_option("--out", a.out)->required();

  auto* mix = app.add_subcommand("mix", "Mix a policy with the uniform policy: rho pi + (1 - rho) uniform");
  mix->add_option("--policy", a.policy)->required();
  mix->add_option("--rho", a.rho)->required();
  mix->add_option("--out", a.out)->required();

  auto* roll = app.add_subcommand("rollout", "Sample trajectories from a policy");
  roll->add_option("--mdp", a.mdp)->required();
  roll->add_option("--policy", a.policy)->required();
  roll->add_option("--n", a.n)->required();
  roll->add_option("--seed", a.seed)->capture_default_str();
  roll->add_option("--max-steps", a.max_steps)->capture_default_str();
  roll->add_option("--threads", a.threads)->capture_default_str();
  roll->add_option("--out", a.out)->required();

  auto* est = app.add_subcommand("estimate", "Fit the MLE model and error function from a dataset");
  est->add_option("--dataset", a.dataset)->required();
  est->add_option("--template", a.template_mdp, "MDP supplying shape, discounts, x0 and r_top")->required();
  est->add_option("--delta", a.delta)->capture_default_str();
  est->add_option("--kind", a.kind, "transition or reward")->capture_default_str();
  est->add_option("--out", a.out)->required();
  est->add_option("--errors", a.errors);
  est->add_option("--counts", a.counts);
  est->add_option("--baseline-out", a.baseline_out, "Also write the empirical behaviour policy");
  est->add_option("--smoothing", a.smoothing)->capture_default_str();

  auto* imp = app.add_subcommand("improve", "Compute an improved policy");
  imp->require_subcommand(1);
  std::string method;
  for (const char* name : {"spibb", "hcpi", "linearized", "adv-linearized", "scalarized-constraint"}) {
    auto* s = imp->add_subcommand(name);
    s->callback([&method, name] { method = name; });
    s->add_option("--lambda", a.lambda)->delimiter(',')->required();
    s->add_option("--out", a.out)->required();
    s->add_option("--threads", a.threads)->capture_default_str();
    const std::string n = name;
    if (n == "hcpi") {
      s->add_option("--dataset", a.dataset)->required();
      s->add_option("--baseline", a.baseline)->required();
      s->add_option("--template", a.template_mdp, "MDP supplying shape, discounts, x0 and r_top")->required();
      s->add_option("--delta", a.delta)->capture_default_str();
      s->add_option("--estimator", a.estimator)->capture_default_str();
      s->add_option("--ci", a.ci)->capture_default_str();
      s->add_option("--c", a.c, "MPeB threshold")->capture_default_str();
      s->add_option("--split", a.split)->capture_default_str();
      s->add_option("--seed", a.seed)->capture_default_str();
      s->add_option("--report", a.report);
      s->add_flag("--allow-dependent-samples", a.allow_dependent);
      continue;
    }
    s->add_option("--mdp", a.mdp)->required();
    if (n == "linearized") continue;
    s->add_option("--baseline", a.baseline)->required();
    if (n == "spibb") {
      s->add_option("--errors", a.errors)->required();
      s->add_option("--epsilon", a.epsilon)->capture_default_str();
      s->add_option("--delta", a.delta)->capture_default_str();
      s->add_option("--iterations", a.iterations)->capture_default_str();
    }
  }

  auto* op = app.add_subcommand("ope", "Off-policy estimate of one objective");
  op->add_option("--dataset", a.dataset)->required();
  op->add_option("--target", a.target)->required();
  op->add_option("--baseline", a.baseline)->required();
  op->add_option("--estimator", a.estimator)->capture_default_str();
  op->add_option("--mdp", a.mdp, "Model for discounts and DR control variates");
  op->add_option("--gamma", a.gamma);
  op->add_option("--k", a.k)->capture_default_str();

  auto* ev = app.add_subcommand("evaluate", "Exact evaluation of a policy against a baseline");
  ev->add_option("--mdp", a.mdp)->required();
  ev->add_option("--policy", a.policy)->required();
  ev->add_option("--baseline", a.baseline)->required();
  ev->add_option("--lambda", a.lambda)->delimiter(',');
  ev->add_option("--out", a.out);

  auto* ex = app.add_subcommand("experiment", "Run the experiment matrix");
  ex->add_option("--config", a.config)->required();
  ex->add_option("--out", a.out);
  ex->add_option("--summary", a.summary);
  ex->add_option("--threads", a.threads, "Override the config's thread count");
  ex->add_flag("--tune", a.tune, "Hyperparameter selection on one environment");
  ex->add_option("--tune-env", a.tune_env);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return kExitOk;
    emit(err, error_json("usage", e.what()));
    return kExitIo;
  }

  try {
    if (show_version) {
      emit(out, json{{"mospi", "1.0.0"},
                     {"mdp", io::kMdpSchema},
                     {"policy", io::kPolicySchema},
                     {"dataset", io::kDatasetSchema},
                     {"report", io::kReportSchema},
                     {"experiment_config", harness::kConfigSchema}});
      return kExitOk;
    }
    if (ex->parsed() && !a.tune && a.out.empty()) throw InvalidInput("--out is required");
    if (gen->parsed()) cmd_gen_env(a, out);
    else if (solve->parsed()) cmd_solve_cmdp(a, out);
    else if (mix->parsed()) cmd_mix(a, out);
    else if (roll->parsed()) cmd_rollout(a, out);
    else if (est->parsed()) cmd_estimate(a, out);
    else if (imp->parsed()) cmd_improve(method, a, out);
    else if (op->parsed()) cmd_ope(a, out);
    else if (ev->parsed()) cmd_evaluate(a, out);
    else if (ex->parsed()) cmd_experiment(a, ex->count("--threads") > 0, out);
    else {
      out << app.help();
      return kExitOk;
    }
    return kExitOk;
  } catch (const NoSolution& e) {
    emit(err, error_json("no_solution", e.what()));
    return kExitNoSolution;
  } catch (const IoError& e) {
    emit(err, error_json("io", e.what(), e.path()));
    return kExitIo;
  } catch (const std::exception& e) {
    emit(err, error_json("domain", e.what()));
    return kExitDomain;
  }
}

}  // namespace mospi::cli
