#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "zdpool/game.hpp"

namespace zdpool {

// Coefficients of the enforced relation alpha*S_p + beta*S_m + gamma = 0.
struct ZDCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

// Pool-side equalizer strategy pinning the miner's long-run payoff.
struct ZDStrategy {
  MixedStrategy strategy;
  double target_payoff = 0.0;
  ZDCoefficients coefficients;
};

struct P2P3 {
  double p2 = 0.0;
  double p3 = 0.0;

  bool feasible(double tolerance = 0.0) const {
    return p2 >= -tolerance && p2 <= 1.0 + tolerance && p3 >= -tolerance && p3 <= 1.0 + tolerance;
  }
};

// Components p2, p3 forced by choosing p1, p4 under p~ = beta*S_m + gamma*1.
// Raw values; they may fall outside [0,1]. Throws DomainError when
// S_m[CC] == S_m[DD].
P2P3 derive_p2_p3(double p1, double p4, const Vec4& miner_payoffs);

// Weighted average of S_m[DD] and S_m[CC] with weights (1-p1) and p4.
// Throws DomainError when 1 - p1 + p4 vanishes.
double controlled_payoff(double p1, double p4, const Vec4& miner_payoffs);

// Largest lambda in (0,1] for which the strategy with 1-p1 = lambda*(1-w),
// p4 = lambda*w keeps p2, p3 in [0,1]. w is the target's position in
// [S_m[DD], S_m[CC]]. Throws DomainError if no positive lambda is feasible.
double max_feasible_lambda(double target, const Vec4& miner_payoffs);

// The strategy on the lambda ray for `target`, without any safety factor.
ZDStrategy strategy_from_lambda(double target, double lambda, const Vec4& miner_payoffs);

inline constexpr double kLambdaSafety = 0.95;

// Deterministic full strategy reaching `target`: lambda = safety * max
// feasible lambda. Throws DomainError for targets outside
// [S_m[DD], S_m[CC]] or when the payoff spread is degenerate.
ZDStrategy strategy_for_target(double target, const Vec4& miner_payoffs,
                               double safety = kLambdaSafety);

// beta and gamma from p~ = (p1-1, p2-1, p3, p4) = beta*S_m + gamma*1, fitted
// on CC and DD and verified on CD and DC. Throws DomainError if p is not an
// equalizer for these payoffs.
ZDCoefficients recover_coefficients(const MixedStrategy& p, const Vec4& miner_payoffs);

struct SelfControlPoint {
  double p1 = 0.0;
  double p4 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  bool p2_out_of_range = false;
  bool p3_out_of_range = false;

  bool feasible() const { return !p2_out_of_range && !p3_out_of_range; }
  MixedStrategy strategy() const { return MixedStrategy(Vec4{p1, p2, p3, p4}); }
};

// The pool trying to pin its own payoff: p~ = alpha*S_p + gamma*1.
SelfControlPoint self_control_point(double p1, double p4, const Vec4& pool_payoffs);

struct SelfControlReport {
  double grid_step = 0.0;
  std::size_t points = 0;
  std::size_t p2_violations = 0;
  std::size_t p3_violations = 0;
  std::vector<SelfControlPoint> feasible;
};

// Sweeps (p1, p4) over [0,1]^2 at `grid_step` (1.0 is always included).
SelfControlReport self_control_report(const Vec4& pool_payoffs, double grid_step);

}  // namespace zdpool
