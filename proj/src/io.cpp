#include "mospi/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mospi/error.hpp"

namespace mospi::io {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_version(const json& j, int expected, const char* what) {
  if (!j.is_object()) throw InvalidInput(std::string(what) + " document must be a JSON object");
  if (!j.contains("version")) throw InvalidInput(std::string(what) + " document lacks a version");
  const int v = j.at("version").get<int>();
  if (v != expected)
    throw InvalidInput(std::string(what) + " schema version " + std::to_string(v) + " is not supported (expected " +
                       std::to_string(expected) + ")");
}

json matrix(std::span<const double> flat, int rows, int cols) {
  json out = json::array();
  for (int i = 0; i < rows; ++i) {
    json row = json::array();
    for (int j = 0; j < cols; ++j) row.push_back(number(flat[static_cast<std::size_t>(i) * cols + j]));
    out.push_back(std::move(row));
  }
  return out;
}

void read_matrix(const json& j, int rows, int cols, std::vector<double>& out, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw InvalidInput(std::string(what) + " must have " + std::to_string(rows) + " rows");
  for (int i = 0; i < rows; ++i) {
    const json& row = j[i];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw InvalidInput(std::string(what) + " row " + std::to_string(i) + " must have " + std::to_string(cols) +
                         " entries");
    for (int c = 0; c < cols; ++c) out.push_back(number_from(row[c]));
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading", path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing", path.string());
  return out;
}

template <class F>
auto parsing(const std::filesystem::path& path, F&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw IoError("malformed '" + path.string() + "': " + e.what(), path.string());
  } catch (const InvalidInput& e) {
    throw IoError("invalid '" + path.string() + "': " + e.what(), path.string());
  }
}

}  // namespace

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) throw InvalidInput("cannot serialize NaN");
  return v;
}

double number_from(const json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw InvalidInput("expected a number or \"inf\", got \"" + s + "\"");
  }
  if (!j.is_number()) throw InvalidInput("expected a number");
  return j.get<double>();
}

std::string to_string(ConstraintSense sense) { return sense == ConstraintSense::kAtMost ? "at_most" : "at_least"; }

ConstraintSense parse_sense(const std::string& s) {
  if (s == "at_most" || s == "at-most" || s == "le") return ConstraintSense::kAtMost;
  if (s == "at_least" || s == "at-least" || s == "ge") return ConstraintSense::kAtLeast;
  throw InvalidInput("unknown constraint sense '" + s + "'");
}

json to_json(const TabularMdp& mdp) {
  mdp.validate();
  json transitions = json::array();
  for (int x = 0; x < mdp.n_states; ++x) {
    json per_action = json::array();
    for (int a = 0; a < mdp.n_actions; ++a) {
      const auto row = mdp.next_row(x, a);
      per_action.push_back(std::vector<double>(row.begin(), row.end()));
    }
    transitions.push_back(std::move(per_action));
  }
  json rewards = json::array();
  for (int k = 0; k < mdp.d; ++k)
    rewards.push_back(matrix(std::span(mdp.r).subspan(static_cast<std::size_t>(k) * mdp.n_states * mdp.n_actions,
                                                      static_cast<std::size_t>(mdp.n_states) * mdp.n_actions),
                             mdp.n_states, mdp.n_actions));
  return json{{"version", kMdpSchema}, {"n_states", mdp.n_states}, {"n_actions", mdp.n_actions},
              {"d", mdp.d},            {"gamma", mdp.gamma},       {"x0", mdp.x0},
              {"r_top", mdp.r_top},    {"transitions", transitions}, {"rewards", rewards},
              {"terminal", mdp.terminal}};
}

TabularMdp mdp_from_json(const json& j) {
  check_version(j, kMdpSchema, "MDP");
  TabularMdp m;
  m.n_states = j.at("n_states").get<int>();
  m.n_actions = j.at("n_actions").get<int>();
  m.d = j.at("d").get<int>();
  m.gamma = j.at("gamma").get<std::vector<double>>();
  m.x0 = j.at("x0").get<int>();
  m.r_top = j.at("r_top").get<double>();
  m.terminal = j.value("terminal", std::vector<int>{});
  if (m.n_states <= 0 || m.n_actions <= 0 || m.d <= 0) throw InvalidInput("MDP dimensions must be positive");

  const json& t = j.at("transitions");
  if (!t.is_array() || static_cast<int>(t.size()) != m.n_states)
    throw InvalidInput("transitions must have one entry per state");
  m.p.reserve(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states);
  for (int x = 0; x < m.n_states; ++x) read_matrix(t[x], m.n_actions, m.n_states, m.p, "transitions[x]");

  const json& r = j.at("rewards");
  if (!r.is_array() || static_cast<int>(r.size()) != m.d) throw InvalidInput("rewards must have one entry per objective");
  m.r.reserve(static_cast<std::size_t>(m.d) * m.n_states * m.n_actions);
  for (int k = 0; k < m.d; ++k) read_matrix(r[k], m.n_states, m.n_actions, m.r, "rewards[k]");
  m.validate();
  return m;
}

json to_json(const Policy& policy) {
  policy.validate();
  return json{{"version", kPolicySchema}, {"probs", matrix(policy.probs, policy.n_states, policy.n_actions)}};
}

Policy policy_from_json(const json& j) {
  check_version(j, kPolicySchema, "policy");
  const json& probs = j.at("probs");
  if (!probs.is_array() || probs.empty() || !probs[0].is_array() || probs[0].empty())
    throw InvalidInput("policy probs must be a non-empty matrix");
  Policy p;
  p.n_states = static_cast<int>(probs.size());
  p.n_actions = static_cast<int>(probs[0].size());
  read_matrix(probs, p.n_states, p.n_actions, p.probs, "probs");
  p.validate();
  return p;
}

json to_json(const Counts& c) {
  json n_xa = json::array(), n_xax = json::array();
  for (int x = 0; x < c.n_states; ++x) {
    json row = json::array(), trans = json::array();
    for (int a = 0; a < c.n_actions; ++a) {
      row.push_back(c.visits(x, a));
      json next = json::array();
      for (int y = 0; y < c.n_states; ++y) next.push_back(c.transitions(x, a, y));
      trans.push_back(std::move(next));
    }
    n_xa.push_back(std::move(row));
    n_xax.push_back(std::move(trans));
  }
  json r_sum = json::array();
  for (int k = 0; k < c.d; ++k)
    r_sum.push_back(matrix(std::span(c.r_sum).subspan(static_cast<std::size_t>(k) * c.n_states * c.n_actions,
                                                      static_cast<std::size_t>(c.n_states) * c.n_actions),
                           c.n_states, c.n_actions));
  return json{{"version", 1},        {"n_states", c.n_states}, {"n_actions", c.n_actions}, {"d", c.d},
              {"n_xa", n_xa},        {"n_xax", n_xax},         {"r_sum", r_sum}};
}

json to_json(const ErrorFunction& e) {
  return json{{"version", 1},
              {"kind", e.kind == ErrorKind::kTransition ? "transition" : "reward"},
              {"delta", e.delta},
              {"e", matrix(e.e, e.n_states, e.n_actions)}};
}

ErrorFunction error_function_from_json(const json& j) {
  check_version(j, 1, "error function");
  ErrorFunction e;
  const std::string kind = j.value("kind", std::string("transition"));
  if (kind == "transition") e.kind = ErrorKind::kTransition;
  else if (kind == "reward") e.kind = ErrorKind::kReward;
  else throw InvalidInput("unknown error kind '" + kind + "'");
  e.delta = j.value("delta", 0.0);
  const json& m = j.at("e");
  if (!m.is_array() || m.empty() || !m[0].is_array()) throw InvalidInput("error matrix must be non-empty");
  e.n_states = static_cast<int>(m.size());
  e.n_actions = static_cast<int>(m[0].size());
  read_matrix(m, e.n_states, e.n_actions, e.e, "e");
  for (double v : e.e)
    if (!(v >= 0.0)) throw InvalidInput("error entries must be non-negative");
  return e;
}

json to_json(const hcpi::SafetyReport& report) {
  json candidates = json::array();
  for (const auto& c : report.per_candidate) {
    json lbs = json::array();
    for (double v : c.lower_bounds) lbs.push_back(number(v));
    candidates.push_back(json{{"alpha", c.alpha},
                              {"estimates", c.estimates},
                              {"lower_bounds", lbs},
                              {"thresholds", c.thresholds},
                              {"pass", c.pass},
                              {"train_objective", c.train_objective}});
  }
  return json{{"version", kReportSchema},
              {"estimator", report.estimator},
              {"ci", report.ci},
              {"delta", report.delta},
              {"delta_per_test", report.delta_per_test},
              {"approximate_ci", report.approximate_ci},
              {"chosen_alpha", report.chosen_alpha ? json(*report.chosen_alpha) : json(nullptr)},
              {"per_candidate", candidates}};
}

json to_json(const ConstraintBlock& block) {
  json t = json::array();
  for (double v : block.thresholds) t.push_back(number(v));
  return json{{"sense", to_string(block.sense)}, {"thresholds", t}};
}

std::optional<ConstraintBlock> constraints_from_json(const json& mdp_doc) {
  if (!mdp_doc.contains("constraints")) return std::nullopt;
  const json& c = mdp_doc.at("constraints");
  ConstraintBlock b;
  b.sense = parse_sense(c.at("sense").get<std::string>());
  for (const json& v : c.at("thresholds")) b.thresholds.push_back(number_from(v));
  return b;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in '" + path.string() + "': " + e.what(), path.string());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'", path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

TabularMdp read_mdp(const std::filesystem::path& path) {
  const json j = read_json(path);
  return parsing(path, [&] { return mdp_from_json(j); });
}

Policy read_policy(const std::filesystem::path& path) {
  const json j = read_json(path);
  return parsing(path, [&] { return policy_from_json(j); });
}

ErrorFunction read_error_function(const std::filesystem::path& path) {
  const json j = read_json(path);
  return parsing(path, [&] { return error_function_from_json(j); });
}

std::string dataset_line(const Trajectory& t) {
  json steps = json::array();
  for (const Step& s : t.steps) steps.push_back(json::array({s.x, s.a, s.x_next, s.r}));
  return json{{"steps", steps}}.dump();
}

Trajectory trajectory_from_json(const json& j, int expected_d) {
  Trajectory t;
  const json& steps = j.at("steps");
  if (!steps.is_array() || steps.empty()) throw InvalidInput("trajectory must have at least one step");
  for (const json& s : steps) {
    if (!s.is_array() || s.size() != 4) throw InvalidInput("step must be [x, a, x_next, [r...]]");
    Step st{s[0].get<int>(), s[1].get<int>(), s[2].get<int>(), s[3].get<std::vector<double>>()};
    if (expected_d > 0 && static_cast<int>(st.r.size()) != expected_d)
      throw InvalidInput("reward vector length " + std::to_string(st.r.size()) + " differs from " +
                         std::to_string(expected_d));
    t.steps.push_back(std::move(st));
  }
  return t;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Trajectory t = trajectory_from_json(json::parse(line), ds.d);
      if (ds.d == 0) ds.d = static_cast<int>(t.steps.front().r.size());
      ds.trajectories.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw IoError("'" + path.string() + "' line " + std::to_string(line_no) + ": " + e.what(), path.string());
    }
  }
  if (ds.d == 0) throw IoError("dataset '" + path.string() + "' has no trajectories", path.string());
  return ds;
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out = open_out(path);
  for (const Trajectory& t : dataset.trajectories) out << dataset_line(t) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'", path.string());
}

}  // namespace mospi::io
