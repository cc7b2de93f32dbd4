#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "mospi/cmdp.hpp"
#include "mospi/estimation.hpp"
#include "mospi/hcpi.hpp"
#include "mospi/mdp.hpp"

namespace mospi::io {

using nlohmann::json;

inline constexpr int kMdpSchema = 1;
inline constexpr int kPolicySchema = 1;
inline constexpr int kDatasetSchema = 1;
inline constexpr int kReportSchema = 1;

// Optional constraint block carried next to an environment's MDP.
struct ConstraintBlock {
  ConstraintSense sense = ConstraintSense::kAtMost;
  std::vector<double> thresholds;
};

json to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const json& j);
json to_json(const Policy& policy);
Policy policy_from_json(const json& j);
json to_json(const Counts& counts);
json to_json(const ErrorFunction& e);
ErrorFunction error_function_from_json(const json& j);
json to_json(const hcpi::SafetyReport& report);

json to_json(const ConstraintBlock& block);
std::optional<ConstraintBlock> constraints_from_json(const json& mdp_doc);

std::string to_string(ConstraintSense sense);
ConstraintSense parse_sense(const std::string& s);

// Doubles that may be infinite; infinities round-trip as "inf" / "-inf".
json number(double v);
double number_from(const json& j);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

TabularMdp read_mdp(const std::filesystem::path& path);
Policy read_policy(const std::filesystem::path& path);
ErrorFunction read_error_function(const std::filesystem::path& path);

std::string dataset_line(const Trajectory& t);
Trajectory trajectory_from_json(const json& j, int expected_d);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace mospi::io
