#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "zdpool/game.hpp"

namespace zdpool {

enum class ClassicalKind { ALLC, ALLD, TFT, WSLS };

inline constexpr std::array<ClassicalKind, 4> kClassicalKinds{
    ClassicalKind::ALLC, ClassicalKind::ALLD, ClassicalKind::TFT, ClassicalKind::WSLS};

std::string_view to_string(ClassicalKind kind);
std::optional<ClassicalKind> parse_classical(std::string_view text);

MixedStrategy as_mixed(ClassicalKind kind);
double classical_cooperation_prob(ClassicalKind kind, GameState previous);

// Logistic response to the cooperate-minus-defect payoff gap. Never
// overflows; returns exactly 0.5 when the payoffs are equal.
double nonmemorial_update(double E_c, double E_d, double epsilon);

struct NonMemorialState {
  double q = 0.5;
  double epsilon = 1.0;
};

struct MemorialState {
  double q = 0.5;
  double f_p = 0.5;
  double f_m = 0.5;
  double W_c = 0.0;
  double W_d = 0.0;
  double E_m = 0.0;
};

struct MemorialUpdate {
  double q = 0.0;
  // E_m <= 1e-12: the ratio is undefined and q was carried over unchanged.
  bool degenerate = false;
};

// q <- clamp(q * W_c / E_m, 0, 1).
MemorialUpdate memorial_update(const MemorialState& state);

struct WValues {
  double W_c = 0.0;
  double W_d = 0.0;
};

// Miner's payoff when cooperating / defecting against a pool that
// cooperates with probability p_t, from the static payoff table.
WValues update_w_values(double p_t, const PayoffVectors& payoffs);

enum class RoundKind { Cooperative, Defective };

// Cooperation record used to approximate p^t and q^t by frequencies. The
// priors count as one pseudo-observation each, so f = (prior + sum) / (n+1)
// and the clamp window is [1/t, 1-1/t] with t = n + 1.
struct CooperationHistory {
  double pool_prior = 0.5;
  double miner_prior = 0.5;
  double pool_sum = 0.0;
  double miner_sum = 0.0;
  std::size_t rounds = 0;

  // Weights are 0/1 for observed actions or probabilities for the
  // expected-value variant.
  void record(double pool_weight, double miner_weight);
  double pool_frequency() const;
  double miner_frequency() const;
};

double clamped_frequency(double prior, double sum, std::size_t rounds);

// Frequency-tracked W update. After a cooperative round W_c is re-solved
// from E_m with W_d fixed; after a defective round W_d is re-solved with W_c
// fixed. Returns the new state with E_m set; q is left to memorial_update.
// Requires at least one recorded round.
MemorialState frequency_tracked_w_update(const MemorialState& previous,
                                         const CooperationHistory& history, RoundKind last_round,
                                         double E_m);

}  // namespace zdpool
