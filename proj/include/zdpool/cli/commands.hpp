#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zdpool/cli/config.hpp"
#include "zdpool/cli/output.hpp"
#include "zdpool/game.hpp"

namespace zdpool::cli {

enum ExitCode : int { kExitOk = 0, kExitDomain = 1, kExitUsage = 2 };

// Single-shot reports. Each carries a one-line "summary" string.
nlohmann::json classify_report(const GameParameters& params);
nlohmann::json zd_derive_report(double p1, double p4, const PayoffVectors& payoffs);
nlohmann::json zd_target_report(double target, const PayoffVectors& payoffs, double safety);
nlohmann::json zd_self_control_report(const PayoffVectors& payoffs, double grid_step);

// File names written by execute_plan; an empty name skips that file.
struct PlanFiles {
  std::string series = "series.csv";
  std::string summary = "summary.csv";
  std::string trajectory = "trajectory.csv";
};

// Runs every case, then writes the CSVs and manifest.json into `dir`.
RunManifest execute_plan(const SimulationPlan& plan, const std::filesystem::path& dir, const PlanFiles& files);

RunManifest cmd_simulate(const std::filesystem::path& config_path, const std::filesystem::path& dir);

inline constexpr std::uint64_t kDefaultReplicateSeed = 20240101;

struct ReplicateOptions {
  int figure = 1;
  std::uint64_t seed = kDefaultReplicateSeed;
  std::size_t repetitions = 100;
  std::optional<std::size_t> rounds;  // preset horizon when empty
};

// Preset configuration for figure 1-4 as a simulate-style config.
nlohmann::json replicate_config(const ReplicateOptions& options);
RunManifest cmd_replicate(const ReplicateOptions& options, const std::filesystem::path& dir);

// Full command-line entry point; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zdpool::cli
