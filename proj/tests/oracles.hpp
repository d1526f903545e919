#pragma once

// Reference computations used only by the tests. None of them call the
// library's solvers.

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace oracle {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<Vec4, 4>;

// Index order CC, CD, DC, DD; first letter is the pool.
inline Mat4 transition(const Vec4& p, const Vec4& q) {
  Mat4 a{};
  for (int s = 0; s < 4; ++s) {
    a[s][0] = p[s] * q[s];
    a[s][1] = p[s] * (1 - q[s]);
    a[s][2] = (1 - p[s]) * q[s];
    a[s][3] = (1 - p[s]) * (1 - q[s]);
  }
  return a;
}

// Markov chain tree theorem: pi_r is proportional to the total weight of
// spanning trees directed into r. Exact for chains with a single recurrent
// class; throws when every tree weight vanishes.
inline Vec4 tree_stationary(const Mat4& a) {
  Vec4 w{};
  for (int root = 0; root < 4; ++root) {
    int others[3];
    int k = 0;
    for (int s = 0; s < 4; ++s)
      if (s != root) others[k++] = s;
    // Each non-root state picks one successor other than itself.
    for (int c = 0; c < 27; ++c) {
      int succ[4] = {-1, -1, -1, -1};
      int code = c;
      double weight = 1.0;
      for (int s : others) {
        int pick = code % 3;
        code /= 3;
        int target = pick >= s ? pick + 1 : pick;  // skip s itself
        succ[s] = target;
        weight *= a[s][target];
      }
      if (weight == 0.0) continue;
      bool tree = true;
      for (int s : others) {
        int x = s;
        for (int hops = 0; hops < 4 && x != root; ++hops) x = succ[x];
        if (x != root) tree = false;
      }
      if (tree) w[root] += weight;
    }
  }
  const double total = w[0] + w[1] + w[2] + w[3];
  if (!(total > 0.0)) throw std::domain_error("no unique recurrent class");
  for (double& x : w) x /= total;
  return w;
}

inline double dot(const Vec4& a, const Vec4& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

inline double stationary_payoff(const Vec4& p, const Vec4& q, const Vec4& s) {
  return dot(tree_stationary(transition(p, q)), s);
}

// Press-Dyson style determinant via Eigen's LU determinant.
inline double dyson_det(const Vec4& p, const Vec4& q, const Vec4& f) {
  Eigen::Matrix4d m;
  const double pool_c[4] = {1, 1, 0, 0};
  const double miner_c[4] = {1, 0, 1, 0};
  for (int i = 0; i < 4; ++i) {
    m(i, 0) = p[i] * q[i] - (i == 0 ? 1.0 : 0.0);
    m(i, 1) = p[i] - pool_c[i];
    m(i, 2) = q[i] - miner_c[i];
    m(i, 3) = f[i];
  }
  return m.determinant();
}

// Payoff the mechanism assigns after a round; straight transcription of
// the contract.
struct MechStep {
  double E;
  double best;
};

inline MechStep mechanism_step(double m_prev, double best, double E_prev, double m_new, double L,
                               double H, double zeta) {
  const double dm = m_new - m_prev;
  if (dm < 0) return {L, best};
  if (dm == 0) return {E_prev, best};
  const double b = m_new > best ? m_new : best;
  const double y = (dm / b + 1.0) * E_prev;
  double E = H * std::exp(zeta * y) / (1.0 + std::exp(zeta * y));
  if (!std::isfinite(E)) E = H;
  return {E < L ? L : E, b};
}

inline Vec4 random_interior(std::mt19937_64& rng, double margin = 0.01) {
  std::uniform_real_distribution<double> u(margin, 1.0 - margin);
  return {u(rng), u(rng), u(rng), u(rng)};
}

}  // namespace oracle
