#include "zdpool/zd_control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zdpool/errors.hpp"
#include "zdpool/tolerances.hpp"

namespace zdpool {

namespace {

constexpr std::size_t CC = 0, CD = 1, DC = 2, DD = 3;

double spread(const Vec4& s, const char* what) {
  const double d = s[CC] - s[DD];
  if (std::abs(d) < tol::kSingular)
    throw DomainError(std::string(what) + ": S[CC] equals S[DD], payoff spread is degenerate");
  return d;
}

// Position of `target` on [S_m[DD], S_m[CC]].
double target_weight(double target, const Vec4& s) {
  const double d = spread(s, "strategy_for_target");
  const double w = (target - s[DD]) / d;
  if (!std::isfinite(target) || w < -tol::kStructural || w > 1.0 + tol::kStructural)
    throw DomainError("target payoff lies outside [S_m[DD], S_m[CC]]");
  return std::clamp(w, 0.0, 1.0);
}

double snap_probability(double x) {
  if (x < 0.0 && x > -tol::kStructural) return 0.0;
  if (x > 1.0 && x < 1.0 + tol::kStructural) return 1.0;
  return x;
}

}  // namespace

P2P3 derive_p2_p3(double p1, double p4, const Vec4& s) {
  const double d = spread(s, "derive_p2_p3");
  return P2P3{
      (p1 * (s[CD] - s[DD]) - (1.0 + p4) * (s[CD] - s[CC])) / d,
      ((1.0 - p1) * (s[DD] - s[DC]) + p4 * (s[CC] - s[DC])) / d,
  };
}

double controlled_payoff(double p1, double p4, const Vec4& s) {
  const double denom = 1.0 - p1 + p4;
  if (!(std::abs(denom) > tol::kSingular))
    throw DomainError("controlled payoff is singular at p1 = 1, p4 = 0");
  return ((1.0 - p1) * s[DD] + p4 * s[CC]) / denom;
}

double max_feasible_lambda(double target, const Vec4& s) {
  const double w = target_weight(target, s);
  // On the ray 1-p1 = lambda*(1-w), p4 = lambda*w both p2 and p3 are affine
  // in lambda with p2(0) = 1 and p3(0) = 0; lambda = 1 gives the slopes.
  const P2P3 at_one = derive_p2_p3(w, w, s);
  const double p2_slope = at_one.p2 - 1.0;
  const double p3_slope = at_one.p3;
  if (p2_slope > tol::kStructural)
    throw DomainError("no feasible strategy: p2 exceeds 1 for every lambda > 0");
  if (p3_slope < -tol::kStructural)
    throw DomainError("no feasible strategy: p3 drops below 0 for every lambda > 0");
  double lambda = 1.0;
  if (p2_slope < 0.0) lambda = std::min(lambda, -1.0 / p2_slope);
  if (p3_slope > 0.0) lambda = std::min(lambda, 1.0 / p3_slope);
  return lambda;
}

ZDStrategy strategy_from_lambda(double target, double lambda, const Vec4& s) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in (0,1]");
  const double w = target_weight(target, s);
  const double p1 = 1.0 - lambda * (1.0 - w);
  const double p4 = lambda * w;
  const P2P3 mid = derive_p2_p3(p1, p4, s);
  if (!mid.feasible(tol::kStructural))
    throw DomainError("lambda is outside the feasible range for this target");
  ZDStrategy out{
      MixedStrategy(Vec4{p1, snap_probability(mid.p2), snap_probability(mid.p3), p4}),
      target,
      {},
  };
  out.coefficients = recover_coefficients(out.strategy, s);
  return out;
}

ZDStrategy strategy_for_target(double target, const Vec4& s, double safety) {
  if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("safety must lie in (0,1]");
  return strategy_from_lambda(target, safety * max_feasible_lambda(target, s), s);
}

ZDCoefficients recover_coefficients(const MixedStrategy& p, const Vec4& s) {
  const double d = spread(s, "recover_coefficients");
  const Vec4 shifted{p.at(CC) - 1.0, p.at(CD) - 1.0, p.at(DC), p.at(DD)};
  const double beta = (shifted[CC] - shifted[DD]) / d;
  const double gamma = shifted[DD] - beta * s[DD];
  for (std::size_t i : {CD, DC})
    if (std::abs(beta * s[i] + gamma - shifted[i]) > tol::kAnalytic)
      throw DomainError("strategy is not an equalizer ZD strategy for these payoffs");
  return ZDCoefficients{0.0, beta, gamma};
}

SelfControlPoint self_control_point(double p1, double p4, const Vec4& s) {
  const double d = spread(s, "self_control_point");
  SelfControlPoint pt;
  pt.p1 = p1;
  pt.p4 = p4;
  pt.p2 = ((1.0 + p4) * (s[CC] - s[CD]) - p1 * (s[DD] - s[CD])) / d;
  pt.p3 = (-(1.0 - p1) * (s[DC] - s[DD]) - p4 * (s[DC] - s[CC])) / d;
  pt.alpha = (p1 - p4 - 1.0) / d;
  pt.gamma = ((1.0 - p1) * s[DD] + p4 * s[CC]) / d;
  pt.p2_out_of_range = pt.p2 < -tol::kStructural || pt.p2 > 1.0 + tol::kStructural;
  pt.p3_out_of_range = pt.p3 < -tol::kStructural || pt.p3 > 1.0 + tol::kStructural;
  return pt;
}

SelfControlReport self_control_report(const Vec4& pool_payoffs, double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 0.5))
    throw std::invalid_argument("grid_step must lie in (0, 0.5]");
  std::vector<double> axis;
  const auto n = static_cast<std::size_t>(std::floor(1.0 / grid_step + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) axis.push_back(std::min(1.0, static_cast<double>(k) * grid_step));
  if (std::abs(axis.back() - 1.0) < 1e-9)
    axis.back() = 1.0;
  else
    axis.push_back(1.0);

  SelfControlReport report;
  report.grid_step = grid_step;
  for (double p1 : axis) {
    for (double p4 : axis) {
      const SelfControlPoint pt = self_control_point(p1, p4, pool_payoffs);
      ++report.points;
      if (pt.p2_out_of_range) ++report.p2_violations;
      if (pt.p3_out_of_range) ++report.p3_violations;
      if (pt.feasible()) report.feasible.push_back(pt);
    }
  }
  return report;
}

}  // namespace zdpool
