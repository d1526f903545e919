#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zdpool/game.hpp"
#include "zdpool/sim_engine.hpp"

namespace zdpool::cli {

// Malformed flags, config files or output locations. Maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// K_p = K_m = 3, pi = 3, mu = 2, sigma = 2, rho = 3.
GameParameters default_game_parameters();

// Reads kp, km, pi, mu, sigma, rho; absent keys keep their defaults.
GameParameters game_from_json(const nlohmann::json& j, GameParameters base = default_game_parameters());
nlohmann::json game_to_json(const GameParameters& p);

struct SimulationCase {
  std::string label;
  ExperimentConfig config;
};

struct SimulationPlan {
  std::vector<SimulationCase> cases;
  // Repetitions per case written to trajectory.csv.
  std::size_t trajectory_repetitions = 1;
  double tail_fraction = 0.1;
  // Fully defaulted configuration; its serialization feeds the digest.
  nlohmann::json resolved;
};

inline constexpr std::array<std::string_view, 4> kRequiredKeys{"rounds", "seed", "pool", "miner"};

// List-valued miner parameters expand into one case per combination.
SimulationPlan parse_simulation_config(const nlohmann::json& j);
SimulationPlan load_simulation_config(const std::filesystem::path& path);

}  // namespace zdpool::cli
