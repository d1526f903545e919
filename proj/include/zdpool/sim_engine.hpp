#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "zdpool/game.hpp"
#include "zdpool/incentive_mechanism.hpp"
#include "zdpool/miner_strategies.hpp"

namespace zdpool {

using Rng = std::mt19937_64;

// Independent stream for one (repetition, miner) pair.
Rng make_stream(std::uint64_t seed, std::uint64_t repetition, std::uint64_t stream);

// Uniform double in [0,1) from the top 53 bits; identical on every platform.
double uniform01(Rng& rng);

// Pool cooperates with probability p_coop, miner with q_coop, independently.
GameState play_round(double p_coop, double q_coop, Rng& rng);

// How a miner's cooperation probability shows up as a power reading.
//   Sampled:  full capacity when she cooperates this round, otherwise
//             defect_fraction * capacity.
//   Expected: q_t * capacity every round. Frequencies track q_t and the
//             pool's cooperation probability instead of sampled actions.
enum class PowerModel { Sampled, Expected };

struct ClassicalMiner {
  ClassicalKind kind = ClassicalKind::ALLC;
};
struct FixedMiner {
  MixedStrategy q;
};
struct NonMemorialMiner {
  double q0 = 0.5;
  double epsilon = 5.0;
};
struct MemorialMiner {
  double q0 = 0.5;
  double p0 = 0.5;
};
using MinerSpec = std::variant<ClassicalMiner, FixedMiner, NonMemorialMiner, MemorialMiner>;

struct FixedPool {
  MixedStrategy strategy;
};
struct MechanismPool {
  double L = 2.0;
  double H = 3.0;
  double zeta = 3.0;
};
using PoolSpec = std::variant<FixedPool, MechanismPool>;

struct ExperimentConfig {
  PayoffVectors payoffs;
  std::size_t rounds = 500;
  std::size_t repetitions = 1;
  MinerSpec miner = ClassicalMiner{};
  PoolSpec pool = FixedPool{};
  // Maximum computing power per miner; one simulated miner per entry.
  std::vector<double> initial_powers{1.0};
  std::uint64_t seed = 0;
  // The "previous" state seen by memory-one strategies in round 1.
  GameState initial_state = GameState::CC;
  PowerModel power_model = PowerModel::Sampled;
  double defect_fraction = 0.5;

  void validate() const;
  MechanismConfig mechanism() const;  // requires a MechanismPool
};

struct Trajectory {
  std::vector<GameState> states;
  std::vector<bool> pool_coop;
  std::vector<bool> miner_coop;
  std::vector<double> pool_payoffs;
  std::vector<double> miner_payoffs;
  std::vector<double> q_series;  // miner's cooperation probability in force
  std::vector<double> p_series;  // pool's cooperation probability in force
  std::vector<Vec4> pool_strategy;
  // Payoff pinned by the pool strategy in force (mechanism E or a fixed
  // equalizer's target); NaN when the strategy pins none.
  std::vector<double> assigned_payoff;
  std::uint64_t seed = 0;

  std::size_t size() const { return states.size(); }
};

enum class RecordMode {
  Full,     // trajectory and per-round series
  Series,   // per-round series only
  Summary,  // totals only
};

struct FixedRunResult {
  Trajectory trajectory;
  std::vector<double> cumulative_miner_average;
  std::vector<double> cumulative_pool_average;
  double pool_average = 0.0;
  double miner_average = 0.0;
};

// Memory-one play of a fixed pool strategy against a classical or fixed miner.
FixedRunResult run_fixed_zd(const ExperimentConfig& config, std::size_t repetition = 0,
                            RecordMode mode = RecordMode::Full);

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> stderr_;
};

// Per-index mean and standard error across equal-length runs.
SeriesStats aggregate(const std::vector<std::vector<double>>& runs);

struct FixedExperimentResult {
  SeriesStats cumulative_miner_average;
  std::vector<double> miner_averages;  // one per repetition
  std::vector<double> pool_averages;
};

FixedExperimentResult run_fixed_experiment(const ExperimentConfig& config);

// Per-round memorial agent state after the update, RecordMode::Full only.
struct MemorialTrace {
  std::vector<RoundKind> kinds;
  std::vector<double> W_c;
  std::vector<double> W_d;
  std::vector<double> f_m;
};

struct MinerRun {
  Trajectory trajectory;  // RecordMode::Full only
  MinerLedger ledger;     // RecordMode::Full only
  MemorialTrace memorial;
  std::vector<double> q_series;
  double pool_total = 0.0;
  double miner_total = 0.0;
  double pool_tail_total = 0.0;
  double miner_tail_total = 0.0;
  std::size_t tail_rounds = 0;
  std::size_t low_sigmoid_clamps = 0;
  std::size_t degenerate_events = 0;
};

struct MechanismRunOptions {
  RecordMode mode = RecordMode::Series;
  // Rounds with 0-based index >= tail_start count towards the tail totals.
  std::size_t tail_start = 0;
};

// One repetition of the mechanism-driven game with evolutionary miners.
std::vector<MinerRun> run_mechanism_repetition(const ExperimentConfig& config,
                                               std::size_t repetition,
                                               const MechanismRunOptions& options = {});

inline constexpr double kConvergenceThreshold = 0.99;
inline constexpr std::size_t kConvergenceHold = 50;

// 1-based round at which `series` first reaches `threshold` and stays there
// for `hold` consecutive rounds.
std::optional<std::size_t> rounds_to_threshold(std::span<const double> series,
                                               double threshold = kConvergenceThreshold,
                                               std::size_t hold = kConvergenceHold);

struct PayoffSummary {
  double pool_average = 0.0;
  double miner_average = 0.0;
  double pool_tail = 0.0;
  double miner_tail = 0.0;
};

struct EvolutionResult {
  std::vector<SeriesStats> q;  // per miner, averaged over repetitions
  std::vector<std::optional<std::size_t>> rounds_to_threshold;
  std::vector<PayoffSummary> payoffs;  // per miner, averaged over repetitions
  std::size_t low_sigmoid_clamps = 0;
  std::size_t degenerate_events = 0;
};

// Any miner kind against the mechanism-driven pool. Tail payoffs cover the
// last `tail_fraction` of rounds.
EvolutionResult run_mechanism_experiment(const ExperimentConfig& config, double tail_fraction = 0.1);
EvolutionResult run_nonmemorial_experiment(const ExperimentConfig& config);
EvolutionResult run_memorial_experiment(const ExperimentConfig& config);

struct LongRunResult {
  std::vector<PayoffSummary> per_miner;
  PayoffSummary overall;
};

// Whole-horizon and tail-window (last `tail_fraction` of rounds) averages of
// realized payoffs, averaged over repetitions.
LongRunResult long_run_actual_payoffs(const ExperimentConfig& config, double tail_fraction = 0.1);

}  // namespace zdpool
