#include "zdpool/miner_strategies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zdpool {

std::string_view to_string(ClassicalKind kind) {
  switch (kind) {
    case ClassicalKind::ALLC: return "ALLC";
    case ClassicalKind::ALLD: return "ALLD";
    case ClassicalKind::TFT: return "TFT";
    case ClassicalKind::WSLS: return "WSLS";
  }
  return "ALLC";
}

std::optional<ClassicalKind> parse_classical(std::string_view text) {
  for (ClassicalKind k : kClassicalKinds)
    if (to_string(k) == text) return k;
  return std::nullopt;
}

MixedStrategy as_mixed(ClassicalKind kind) {
  switch (kind) {
    case ClassicalKind::ALLC: return MixedStrategy(Vec4{1, 1, 1, 1});
    case ClassicalKind::ALLD: return MixedStrategy(Vec4{0, 0, 0, 0});
    case ClassicalKind::TFT: return MixedStrategy(Vec4{1, 1, 0, 0});
    case ClassicalKind::WSLS: return MixedStrategy(Vec4{1, 0, 0, 1});
  }
  throw std::invalid_argument("unknown classical strategy");
}

double classical_cooperation_prob(ClassicalKind kind, GameState previous) {
  return as_mixed(kind)[previous];
}

double nonmemorial_update(double E_c, double E_d, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const double x = epsilon * (E_c - E_d);
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

MemorialUpdate memorial_update(const MemorialState& s) {
  if (!(s.E_m > 1e-12)) return MemorialUpdate{s.q, true};
  return MemorialUpdate{std::clamp(s.q * s.W_c / s.E_m, 0.0, 1.0), false};
}

WValues update_w_values(double p_t, const PayoffVectors& payoffs) {
  if (!(p_t >= 0.0 && p_t <= 1.0)) throw std::invalid_argument("p_t must lie in [0,1]");
  const auto& s = payoffs.miner;
  return WValues{p_t * s[0] + (1.0 - p_t) * s[2], p_t * s[1] + (1.0 - p_t) * s[3]};
}

double clamped_frequency(double prior, double sum, std::size_t rounds) {
  const double t = static_cast<double>(rounds + 1);
  const double f = (prior + sum) / t;
  if (rounds == 0) return f;
  return std::clamp(f, 1.0 / t, 1.0 - 1.0 / t);
}

void CooperationHistory::record(double pool_weight, double miner_weight) {
  pool_sum += pool_weight;
  miner_sum += miner_weight;
  ++rounds;
}

double CooperationHistory::pool_frequency() const {
  return clamped_frequency(pool_prior, pool_sum, rounds);
}

double CooperationHistory::miner_frequency() const {
  return clamped_frequency(miner_prior, miner_sum, rounds);
}

MemorialState frequency_tracked_w_update(const MemorialState& previous,
                                         const CooperationHistory& history, RoundKind last_round,
                                         double E_m) {
  if (history.rounds == 0)
    throw std::invalid_argument("frequency update needs at least one recorded round");
  MemorialState next = previous;
  next.f_p = history.pool_frequency();
  next.f_m = history.miner_frequency();
  next.E_m = E_m;
  if (last_round == RoundKind::Cooperative)
    next.W_c = (E_m - (1.0 - next.f_m) * next.W_d) / next.f_m;
  else
    next.W_d = (E_m - next.f_m * next.W_c) / (1.0 - next.f_m);
  return next;
}

}  // namespace zdpool
