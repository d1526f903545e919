#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace zdpool {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<Vec4, 4>;

// Joint outcome of one round; first letter is the pool's action, second the
// miner's. The enumerator order is the index order of every 4-vector.
enum class GameState : std::uint8_t { CC = 0, CD = 1, DC = 2, DD = 3 };

inline constexpr std::array<GameState, 4> kAllStates{GameState::CC, GameState::CD, GameState::DC,
                                                     GameState::DD};

constexpr std::size_t index(GameState s) { return static_cast<std::size_t>(s); }
constexpr GameState make_state(bool pool_cooperates, bool miner_cooperates) {
  return static_cast<GameState>((pool_cooperates ? 0 : 2) + (miner_cooperates ? 0 : 1));
}
constexpr bool pool_cooperated(GameState s) { return index(s) < 2; }
constexpr bool miner_cooperated(GameState s) { return index(s) % 2 == 0; }

std::string_view to_string(GameState s);
std::optional<GameState> parse_state(std::string_view text);

struct GameParameters {
  double K_p = 0.0;
  double K_m = 0.0;
  double pi = 1.0;
  double mu = 1.0;
  double sigma = 1.0;
  double rho = 1.0;

  // Throws std::invalid_argument unless pi, mu, sigma, rho are finite and > 0.
  void validate() const;
};

// Per-state payoffs indexed CC, CD, DC, DD.
struct PayoffVectors {
  Vec4 pool{};
  Vec4 miner{};

  double pool_at(GameState s) const { return pool[index(s)]; }
  double miner_at(GameState s) const { return miner[index(s)]; }
};

PayoffVectors build_payoff_vectors(const GameParameters& params);

// Memory-one strategy: cooperation probability conditioned on the previous
// round's joint outcome.
class MixedStrategy {
 public:
  MixedStrategy() = default;
  // Throws std::invalid_argument if any component is outside [0,1] or NaN.
  explicit MixedStrategy(const Vec4& probs);

  double operator[](GameState s) const { return probs_[index(s)]; }
  double at(std::size_t i) const { return probs_.at(i); }
  const Vec4& probs() const { return probs_; }

  static MixedStrategy constant(double p) { return MixedStrategy(Vec4{p, p, p, p}); }

  friend bool operator==(const MixedStrategy&, const MixedStrategy&) = default;

 private:
  Vec4 probs_{1.0, 1.0, 1.0, 1.0};
};

enum class Classification { IPD, PDOnly, Neither };
std::string_view to_string(Classification c);

struct Inequality {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct ClassificationReport {
  Classification kind = Classification::Neither;
  // pi > mu, rho > sigma, mu < rho, sigma < pi
  std::array<Inequality, 4> stated;
  // Welfare ordering and the per-player iterated-play conditions, surfaced
  // for inspection only; they do not feed `kind` beyond PD vs IPD.
  std::vector<Inequality> derived;
  bool is_pd = false;
  bool iterated_condition = false;
};

ClassificationReport classify_game(const GameParameters& params);

// Row-stochastic 4x4 matrix: rows are the previous state, columns the next.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  // Throws std::invalid_argument unless entries are in [0,1] and rows sum to 1.
  explicit TransitionMatrix(const Mat4& entries);

  double operator()(GameState from, GameState to) const { return m_[index(from)][index(to)]; }
  const Mat4& entries() const { return m_; }

 private:
  Mat4 m_{};
};

TransitionMatrix transition_matrix(const MixedStrategy& p, const MixedStrategy& q);

struct StationaryDistribution {
  Vec4 v{};
  // True iff the chain is irreducible and aperiodic over all four states.
  // When false, v is the long-run (Cesaro) visitation from the initial state.
  bool ergodic = false;
};

StationaryDistribution stationary_distribution(const TransitionMatrix& A,
                                               GameState initial = GameState::CC);

double determinant(const Mat4& m);

// det[p.*q - e_CC | p - e_CC - e_CD | q - e_CC - e_DC | f]
double press_dyson_determinant(const MixedStrategy& p, const MixedStrategy& q, const Vec4& f);

struct ExpectedPayoffs {
  double pool = 0.0;
  double miner = 0.0;
  bool ergodic = false;
};

ExpectedPayoffs expected_payoffs(const MixedStrategy& p, const MixedStrategy& q,
                                 const PayoffVectors& payoffs,
                                 GameState initial = GameState::CC);

// D(p,q,S)/D(p,q,1). Throws DomainError when D(p,q,1) vanishes.
ExpectedPayoffs determinant_payoffs(const MixedStrategy& p, const MixedStrategy& q,
                                    const PayoffVectors& payoffs);

double dot(const Vec4& a, const Vec4& b);

}  // namespace zdpool
