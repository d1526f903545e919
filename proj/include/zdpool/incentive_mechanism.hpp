#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "zdpool/game.hpp"
#include "zdpool/zd_control.hpp"

namespace zdpool {

struct MechanismConfig {
  std::size_t rounds = 1;  // M
  std::size_t miners = 1;  // N
  double L = 0.0;
  double H = 0.0;
  double zeta = 1.0;
  PayoffVectors payoffs;

  // S_m[DD] <= L < H <= S_m[CC], zeta > 0, M, N >= 1.
  void validate() const;
};

// Per-miner controller state.
struct MinerLedger {
  std::size_t miner_id = 0;
  std::vector<double> m_history;
  double best = 0.0;  // B, running maximum of m_history
  std::vector<double> E_history;
  std::vector<ZDStrategy> p_history;
  // Rounds where H*sigmoid(zeta*y) fell below L and was raised to L.
  std::size_t low_sigmoid_clamps = 0;

  std::size_t rounds() const { return m_history.size(); }
  double last_power() const { return m_history.back(); }
  double last_payoff() const { return E_history.back(); }
  const ZDStrategy& last_strategy() const { return p_history.back(); }
};

// E_i = m_i / sum(m) * (H - L) + L. Throws std::invalid_argument when no
// power is positive or any is negative.
std::vector<double> initial_rewards(std::span<const double> powers, double L, double H);

// Round-1 ledgers: initial reward, B = m^1 and the matching ZD strategy.
std::vector<MinerLedger> open_ledgers(std::span<const double> powers, const MechanismConfig& config);

struct StepResult {
  double delta = 0.0;
  double E = 0.0;
  ZDStrategy p;
  bool clamped = false;
};

// One Algorithm-1 round for a single miner; appends to the ledger.
//   dm < 0: E = L
//   dm = 0: E and p carried over
//   dm > 0: B = max(B, m), y = (dm/B + 1) * E_prev, E = H*sigmoid(zeta*y)
StepResult step(MinerLedger& ledger, double m_new, const MechanismConfig& config);

// The payoff `step` would assign for `m_new` without mutating the ledger.
double quoted_payoff(const MinerLedger& ledger, double m_new, const MechanismConfig& config);

// schedule[i][j] is miner i's power in round j+1.
std::vector<MinerLedger> run_mechanism(const std::vector<std::vector<double>>& schedule,
                                       const MechanismConfig& config);

struct LedgerRecord {
  std::size_t round = 0;  // 1-based
  std::size_t miner_id = 0;
  double m = 0.0;
  double delta = 0.0;
  double best = 0.0;
  double E = 0.0;
  Vec4 p{};
};

// Flattened export, miner-major. `best` is the running maximum as of that round.
std::vector<LedgerRecord> ledger_records(const std::vector<MinerLedger>& ledgers);

}  // namespace zdpool
