#include "zdpool/incentive_mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zdpool/miner_strategies.hpp"

namespace zdpool {

namespace {

double logistic(double x) { return nonmemorial_update(x, 0.0, 1.0); }

struct Quote {
  double delta = 0.0;
  double best = 0.0;
  double E = 0.0;
  bool carried = false;
  bool clamped = false;
};

Quote quote(const MinerLedger& ledger, double m_new, const MechanismConfig& c) {
  if (ledger.rounds() == 0) throw std::invalid_argument("ledger has no prior round");
  if (!(m_new >= 0.0) || !std::isfinite(m_new))
    throw std::invalid_argument("computing power must be finite and nonnegative");
  Quote q;
  q.delta = m_new - ledger.last_power();
  q.best = ledger.best;
  if (q.delta < 0.0) {
    q.E = c.L;
  } else if (q.delta == 0.0) {
    q.E = ledger.last_payoff();
    q.carried = true;
  } else {
    q.best = std::max(q.best, m_new);
    const double y = (q.delta / q.best + 1.0) * ledger.last_payoff();
    q.E = c.H * logistic(c.zeta * y);
    if (q.E < c.L) {
      q.E = c.L;
      q.clamped = true;
    }
  }
  return q;
}

}  // namespace

void MechanismConfig::validate() const {
  if (rounds == 0 || miners == 0) throw std::invalid_argument("M and N must be positive");
  if (!(L < H)) throw std::invalid_argument("L must be below H");
  if (L < payoffs.miner[3] || H > payoffs.miner[0])
    throw std::invalid_argument("[L, H] must lie within [S_m[DD], S_m[CC]]");
  if (!(zeta > 0.0)) throw std::invalid_argument("zeta must be positive");
}

std::vector<double> initial_rewards(std::span<const double> powers, double L, double H) {
  double total = 0.0;
  for (double m : powers) {
    if (!(m >= 0.0) || !std::isfinite(m))
      throw std::invalid_argument("computing power must be finite and nonnegative");
    total += m;
  }
  if (!(total > 0.0)) throw std::invalid_argument("at least one miner needs positive power");
  std::vector<double> rewards;
  rewards.reserve(powers.size());
  for (double m : powers) rewards.push_back(m / total * (H - L) + L);
  return rewards;
}

std::vector<MinerLedger> open_ledgers(std::span<const double> powers, const MechanismConfig& config) {
  config.validate();
  if (powers.size() != config.miners) throw std::invalid_argument("expected one power per miner");
  const auto rewards = initial_rewards(powers, config.L, config.H);
  std::vector<MinerLedger> ledgers(powers.size());
  for (std::size_t i = 0; i < powers.size(); ++i) {
    auto& l = ledgers[i];
    l.miner_id = i;
    l.m_history.push_back(powers[i]);
    l.best = powers[i];
    l.E_history.push_back(rewards[i]);
    l.p_history.push_back(strategy_for_target(rewards[i], config.payoffs.miner));
  }
  return ledgers;
}

StepResult step(MinerLedger& ledger, double m_new, const MechanismConfig& config) {
  const Quote q = quote(ledger, m_new, config);
  StepResult r;
  r.delta = q.delta;
  r.E = q.E;
  r.clamped = q.clamped;
  r.p = q.carried ? ledger.last_strategy() : strategy_for_target(q.E, config.payoffs.miner);
  ledger.best = q.best;
  if (q.clamped) ++ledger.low_sigmoid_clamps;
  ledger.m_history.push_back(m_new);
  ledger.E_history.push_back(r.E);
  ledger.p_history.push_back(r.p);
  return r;
}

double quoted_payoff(const MinerLedger& ledger, double m_new, const MechanismConfig& config) {
  return quote(ledger, m_new, config).E;
}

std::vector<MinerLedger> run_mechanism(const std::vector<std::vector<double>>& schedule,
                                       const MechanismConfig& config) {
  config.validate();
  if (schedule.size() != config.miners)
    throw std::invalid_argument("schedule must have one row per miner");
  for (const auto& row : schedule)
    if (row.size() != config.rounds)
      throw std::invalid_argument("schedule rows must have one entry per round");

  std::vector<double> first;
  for (const auto& row : schedule) first.push_back(row.front());
  auto ledgers = open_ledgers(first, config);
  for (std::size_t i = 0; i < ledgers.size(); ++i)
    for (std::size_t j = 1; j < config.rounds; ++j) step(ledgers[i], schedule[i][j], config);
  return ledgers;
}

std::vector<LedgerRecord> ledger_records(const std::vector<MinerLedger>& ledgers) {
  std::vector<LedgerRecord> out;
  for (const auto& l : ledgers) {
    double best = 0.0;
    for (std::size_t j = 0; j < l.rounds(); ++j) {
      best = j == 0 ? l.m_history[0] : std::max(best, l.m_history[j]);
      out.push_back(LedgerRecord{j + 1, l.miner_id, l.m_history[j],
                                 j == 0 ? 0.0 : l.m_history[j] - l.m_history[j - 1], best,
                                 l.E_history[j], l.p_history[j].strategy.probs()});
    }
  }
  return out;
}

}  // namespace zdpool
