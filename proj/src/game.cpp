#include "zdpool/game.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "zdpool/errors.hpp"
#include "zdpool/tolerances.hpp"

namespace zdpool {

namespace {

constexpr std::array<std::string_view, 4> kStateNames{"CC", "CD", "DC", "DD"};

using BoolMat = std::array<std::array<bool, 4>, 4>;

BoolMat support(const Mat4& m) {
  BoolMat s{};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) s[i][j] = m[i][j] > 0.0;
  return s;
}

BoolMat bool_product(const BoolMat& a, const BoolMat& b) {
  BoolMat r{};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 4 && !r[i][j]; ++k) r[i][j] = a[i][k] && b[k][j];
  return r;
}

// Reflexive-transitive closure.
BoolMat reachability(const BoolMat& adj) {
  BoolMat r = adj;
  for (std::size_t i = 0; i < 4; ++i) r[i][i] = true;
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) r[i][j] = r[i][j] || (r[i][k] && r[k][j]);
  return r;
}

// A primitive 4x4 matrix has a strictly positive power no later than
// (n-1)^2 + 1 = 10.
bool is_primitive(const BoolMat& adj) {
  BoolMat power = adj;
  for (int k = 1; k <= 10; ++k) {
    bool all = true;
    for (const auto& row : power)
      for (bool b : row) all = all && b;
    if (all) return true;
    power = bool_product(power, adj);
  }
  return false;
}

// Stationary vector of the chain restricted to `states` (which must form a
// closed communicating class). Solves pi^T (A - I) = 0 with one equation
// replaced by the normalization sum(pi) = 1.
Eigen::VectorXd class_stationary(const Mat4& a, const std::vector<std::size_t>& states) {
  const auto n = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd sys(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      sys(r, c) = a[states[c]][states[r]] - (r == c ? 1.0 : 0.0);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  sys.row(n - 1).setOnes();
  rhs(n - 1) = 1.0;
  return sys.partialPivLu().solve(rhs);
}

}  // namespace

std::string_view to_string(GameState s) { return kStateNames[index(s)]; }

std::optional<GameState> parse_state(std::string_view text) {
  for (std::size_t i = 0; i < 4; ++i) {
    const auto name = kStateNames[i];
    if (text.size() == 2 && std::equal(name.begin(), name.end(), text.begin(), [](char a, char b) {
          return a == std::toupper(static_cast<unsigned char>(b));
        }))
      return static_cast<GameState>(i);
  }
  return std::nullopt;
}

void GameParameters::validate() const {
  const auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0)
      throw std::invalid_argument(std::string(name) + " must be finite and strictly positive");
  };
  if (!std::isfinite(K_p) || !std::isfinite(K_m))
    throw std::invalid_argument("K_p and K_m must be finite");
  check(pi, "pi");
  check(mu, "mu");
  check(sigma, "sigma");
  check(rho, "rho");
}

PayoffVectors build_payoff_vectors(const GameParameters& params) {
  params.validate();
  const auto& g = params;
  return PayoffVectors{
      Vec4{g.K_p, g.K_p - g.pi, g.K_p + g.mu, g.K_p - g.pi + g.mu},
      Vec4{g.K_m, g.K_m + g.sigma, g.K_m - g.rho, g.K_m + g.sigma - g.rho},
  };
}

MixedStrategy::MixedStrategy(const Vec4& probs) : probs_(probs) {
  for (double p : probs_)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("strategy components must lie in [0,1]");
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::IPD: return "IPD";
    case Classification::PDOnly: return "PD_only";
    case Classification::Neither: return "neither";
  }
  return "neither";
}

ClassificationReport classify_game(const GameParameters& params) {
  params.validate();
  const auto& g = params;
  const auto gt = [](std::string name, double lhs, double rhs) {
    return Inequality{std::move(name), lhs, rhs, lhs > rhs};
  };
  const auto lt = [](std::string name, double lhs, double rhs) {
    return Inequality{std::move(name), lhs, rhs, lhs < rhs};
  };
  ClassificationReport report;
  report.stated = {
      gt("pi > mu", g.pi, g.mu),
      gt("rho > sigma", g.rho, g.sigma),
      lt("mu < rho", g.mu, g.rho),
      lt("sigma < pi", g.sigma, g.pi),
  };

  const double w_cc = g.K_p + g.K_m;
  const double w_cd = w_cc + g.sigma - g.pi;
  const double w_dc = w_cc - g.rho + g.mu;
  const double w_dd = w_cc + g.sigma + g.mu - g.rho - g.pi;
  report.derived = {
      gt("W_cc > W_cd", w_cc, w_cd),
      gt("W_cc > W_dc", w_cc, w_dc),
      gt("W_cc > W_dd", w_cc, w_dd),
      gt("2K_p > (K_p+mu) + (K_p-pi)", 2 * g.K_p, (g.K_p + g.mu) + (g.K_p - g.pi)),
      gt("2K_m > (K_m+sigma) + (K_m-rho)", 2 * g.K_m, (g.K_m + g.sigma) + (g.K_m - g.rho)),
  };

  report.is_pd = report.stated[2].holds && report.stated[3].holds;
  report.iterated_condition = report.stated[0].holds && report.stated[1].holds;
  if (report.is_pd && report.iterated_condition)
    report.kind = Classification::IPD;
  else if (report.is_pd)
    report.kind = Classification::PDOnly;
  else
    report.kind = Classification::Neither;
  return report;
}

TransitionMatrix::TransitionMatrix(const Mat4& entries) : m_(entries) {
  for (const auto& row : m_) {
    double sum = 0.0;
    for (double x : row) {
      if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument("transition probabilities must lie in [0,1]");
      sum += x;
    }
    if (std::abs(sum - 1.0) > tol::kStructural)
      throw std::invalid_argument("transition matrix rows must sum to 1");
  }
}

TransitionMatrix transition_matrix(const MixedStrategy& p, const MixedStrategy& q) {
  Mat4 a{};
  for (GameState s : kAllStates) {
    const double ps = p[s];
    const double qs = q[s];
    a[index(s)] = Vec4{ps * qs, ps * (1.0 - qs), (1.0 - ps) * qs, (1.0 - ps) * (1.0 - qs)};
  }
  return TransitionMatrix(a);
}

StationaryDistribution stationary_distribution(const TransitionMatrix& A, GameState initial) {
  const Mat4& a = A.entries();
  const BoolMat adj = support(a);
  const BoolMat reach = reachability(adj);

  // Communicating classes, then which of them are closed.
  std::array<int, 4> class_of{-1, -1, -1, -1};
  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < 4; ++i) {
    if (class_of[i] >= 0) continue;
    std::vector<std::size_t> members;
    for (std::size_t j = 0; j < 4; ++j)
      if (reach[i][j] && reach[j][i]) {
        class_of[j] = static_cast<int>(classes.size());
        members.push_back(j);
      }
    classes.push_back(std::move(members));
  }
  std::vector<bool> closed(classes.size(), true);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (adj[i][j] && class_of[i] != class_of[j]) closed[class_of[i]] = false;

  StationaryDistribution out;
  if (classes.size() == 1) {
    out.ergodic = is_primitive(adj);
    const Eigen::VectorXd pi = class_stationary(a, classes.front());
    for (std::size_t i = 0; i < 4; ++i) out.v[i] = pi(static_cast<Eigen::Index>(i));
    return out;
  }

  // Reducible: long-run visitation is the absorption-probability-weighted
  // mixture of the closed classes' stationary vectors.
  std::vector<std::size_t> transient;
  for (std::size_t i = 0; i < 4; ++i)
    if (!closed[class_of[i]]) transient.push_back(i);

  const auto nt = static_cast<Eigen::Index>(transient.size());
  Eigen::PartialPivLU<Eigen::MatrixXd> fundamental;
  if (nt > 0) {
    Eigen::MatrixXd i_minus_q(nt, nt);
    for (Eigen::Index r = 0; r < nt; ++r)
      for (Eigen::Index c = 0; c < nt; ++c)
        i_minus_q(r, c) = (r == c ? 1.0 : 0.0) - a[transient[r]][transient[c]];
    fundamental.compute(i_minus_q);
  }

  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (!closed[k]) continue;
    double weight = 0.0;
    if (static_cast<std::size_t>(class_of[index(initial)]) == k) {
      weight = 1.0;
    } else if (!closed[class_of[index(initial)]]) {
      Eigen::VectorXd into(nt);
      for (Eigen::Index r = 0; r < nt; ++r) {
        double s = 0.0;
        for (std::size_t j : classes[k]) s += a[transient[r]][j];
        into(r) = s;
      }
      const Eigen::VectorXd absorb = fundamental.solve(into);
      const auto pos = std::find(transient.begin(), transient.end(), index(initial)) -
                       transient.begin();
      weight = absorb(pos);
    }
    if (weight == 0.0) continue;
    const Eigen::VectorXd pi = class_stationary(a, classes[k]);
    for (std::size_t m = 0; m < classes[k].size(); ++m)
      out.v[classes[k][m]] += weight * pi(static_cast<Eigen::Index>(m));
  }
  out.ergodic = false;
  return out;
}

double determinant(const Mat4& m) {
  // Cofactor expansion along the first row using 2x2 minors of rows 2-3.
  const double s0 = m[2][0] * m[3][1] - m[2][1] * m[3][0];
  const double s1 = m[2][0] * m[3][2] - m[2][2] * m[3][0];
  const double s2 = m[2][0] * m[3][3] - m[2][3] * m[3][0];
  const double s3 = m[2][1] * m[3][2] - m[2][2] * m[3][1];
  const double s4 = m[2][1] * m[3][3] - m[2][3] * m[3][1];
  const double s5 = m[2][2] * m[3][3] - m[2][3] * m[3][2];

  const double c0 = m[1][1] * s5 - m[1][2] * s4 + m[1][3] * s3;
  const double c1 = m[1][0] * s5 - m[1][2] * s2 + m[1][3] * s1;
  const double c2 = m[1][0] * s4 - m[1][1] * s2 + m[1][3] * s0;
  const double c3 = m[1][0] * s3 - m[1][1] * s1 + m[1][2] * s0;

  return m[0][0] * c0 - m[0][1] * c1 + m[0][2] * c2 - m[0][3] * c3;
}

double press_dyson_determinant(const MixedStrategy& p, const MixedStrategy& q, const Vec4& f) {
  Mat4 m{};
  for (GameState s : kAllStates) {
    const std::size_t i = index(s);
    const double cc = s == GameState::CC ? 1.0 : 0.0;
    m[i][0] = p[s] * q[s] - cc;
    m[i][1] = p[s] - (pool_cooperated(s) ? 1.0 : 0.0);
    m[i][2] = q[s] - (miner_cooperated(s) ? 1.0 : 0.0);
    m[i][3] = f[i];
  }
  return determinant(m);
}

double dot(const Vec4& a, const Vec4& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

ExpectedPayoffs expected_payoffs(const MixedStrategy& p, const MixedStrategy& q,
                                 const PayoffVectors& payoffs, GameState initial) {
  const auto st = stationary_distribution(transition_matrix(p, q), initial);
  const double norm = st.v[0] + st.v[1] + st.v[2] + st.v[3];
  return ExpectedPayoffs{dot(st.v, payoffs.pool) / norm, dot(st.v, payoffs.miner) / norm,
                         st.ergodic};
}

ExpectedPayoffs determinant_payoffs(const MixedStrategy& p, const MixedStrategy& q,
                                    const PayoffVectors& payoffs) {
  const double denom = press_dyson_determinant(p, q, Vec4{1.0, 1.0, 1.0, 1.0});
  if (std::abs(denom) < tol::kSingular)
    throw DomainError("D(p,q,1) vanishes; the chain has no unique stationary vector");
  return ExpectedPayoffs{press_dyson_determinant(p, q, payoffs.pool) / denom,
                         press_dyson_determinant(p, q, payoffs.miner) / denom, true};
}

}  // namespace zdpool
