#include <doctest.h>

#include <stdexcept>

#include <array>
#include <random>

#include "oracles.hpp"
#include "zdpool/sim_engine.hpp"

using namespace zdpool;

namespace {

const PayoffVectors kPayoffs{{3, 0, 5, 2}, {3, 5, 0, 2}};
const MixedStrategy kP{Vec4{0.9, 0.3, 0.8, 0.2}};

ExperimentConfig fixed_config(MinerSpec miner, std::size_t rounds, std::uint64_t seed = 1) {
  ExperimentConfig c;
  c.payoffs = kPayoffs;
  c.rounds = rounds;
  c.miner = miner;
  c.pool = FixedPool{kP};
  c.seed = seed;
  return c;
}

ExperimentConfig mechanism_config(MinerSpec miner, std::size_t rounds, std::size_t reps,
                                  PowerModel model = PowerModel::Expected) {
  ExperimentConfig c;
  c.payoffs = kPayoffs;
  c.rounds = rounds;
  c.repetitions = reps;
  c.miner = miner;
  c.pool = MechanismPool{2.0, 3.0, 3.0};
  c.initial_powers = {1, 2, 3, 4};
  c.power_model = model;
  c.seed = 99;
  return c;
}

}  // namespace

TEST_SUITE("sim_engine") {
  TEST_CASE("play_round examples") {
    Rng rng = make_stream(1, 0, 0);
    for (int i = 0; i < 1000; ++i) {
      CHECK(play_round(1, 1, rng) == GameState::CC);
      CHECK(play_round(0, 1, rng) == GameState::DC);
    }
    std::array<int, 4> counts{};
    for (int i = 0; i < 100000; ++i) ++counts[index(play_round(0.5, 0.5, rng))];
    for (int n : counts) CHECK(std::abs(n / 1e5 - 0.25) < 0.01);
  }

  TEST_CASE("uniform draws lie in [0,1) and streams are independent of each other") {
    Rng a = make_stream(7, 0, 0), b = make_stream(7, 0, 1), c = make_stream(7, 1, 0), a2 = make_stream(7, 0, 0);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 1000; ++i) {
      const double x = uniform01(a);
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
      CHECK(x == uniform01(a2));
      same_ab += x == uniform01(b);
      same_ac += x == uniform01(c);
    }
    CHECK(same_ab == 0);
    CHECK(same_ac == 0);
  }

  TEST_CASE("fixed equalizer against classical miners") {
    for (ClassicalKind k : {ClassicalKind::ALLC, ClassicalKind::TFT}) {
      const auto r = run_fixed_zd(fixed_config(ClassicalMiner{k}, 100000), 0, RecordMode::Summary);
      CHECK(std::abs(r.miner_average - 8.0 / 3.0) < 0.02);
    }
    auto c = fixed_config(ClassicalMiner{ClassicalKind::ALLC}, 1000);
    c.pool = FixedPool{MixedStrategy::constant(1.0)};
    const auto r = run_fixed_zd(c);
    CHECK(r.miner_average == 3.0);
    CHECK(r.pool_average == 3.0);
  }

  TEST_CASE("empirical payoffs agree with the stationary oracle for interior strategies") {
    std::mt19937_64 rng(40);
    for (int k = 0; k < 3; ++k) {
      const auto p = oracle::random_interior(rng, 0.05), q = oracle::random_interior(rng, 0.05);
      auto c = fixed_config(FixedMiner{MixedStrategy(q)}, 1000000, 40 + k);
      c.pool = FixedPool{MixedStrategy(p)};
      const auto r = run_fixed_zd(c, 0, RecordMode::Summary);
      const auto v = oracle::tree_stationary(oracle::transition(p, q));
      CHECK(std::abs(r.miner_average - oracle::dot(v, kPayoffs.miner)) < 0.01);
      CHECK(std::abs(r.pool_average - oracle::dot(v, kPayoffs.pool)) < 0.01);
    }
  }

  TEST_CASE("trajectories are complete and reproducible") {
    const auto c = fixed_config(ClassicalMiner{ClassicalKind::WSLS}, 500, 5);
    const auto a = run_fixed_zd(c), b = run_fixed_zd(c);
    const auto& t = a.trajectory;
    CHECK(t.size() == 500);
    CHECK(t.pool_coop.size() == 500);
    CHECK(t.miner_coop.size() == 500);
    CHECK(t.pool_payoffs.size() == 500);
    CHECK(t.miner_payoffs.size() == 500);
    CHECK(t.q_series.size() == 500);
    CHECK(t.p_series.size() == 500);
    CHECK(t.states == b.trajectory.states);
    CHECK(a.cumulative_miner_average == b.cumulative_miner_average);
    CHECK(t.assigned_payoff.front() == doctest::Approx(8.0 / 3.0));
    const auto other = run_fixed_zd(fixed_config(ClassicalMiner{ClassicalKind::WSLS}, 500, 6));
    CHECK(other.trajectory.states != t.states);
  }

  TEST_CASE("mechanism repetitions are reproducible") {
    const auto c = mechanism_config(MemorialMiner{0.3, 0.3}, 200, 1, PowerModel::Sampled);
    const auto a = run_mechanism_repetition(c, 3, {RecordMode::Full, 0});
    const auto b = run_mechanism_repetition(c, 3, {RecordMode::Full, 0});
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a[i].trajectory.states == b[i].trajectory.states);
      CHECK(a[i].q_series == b[i].q_series);
      CHECK(a[i].ledger.E_history == b[i].ledger.E_history);
      CHECK(a[i].trajectory.size() == 200);
      CHECK(a[i].ledger.rounds() == 200);
    }
  }

  TEST_CASE("pool plays the strategy assigned in the previous round") {
    const auto c = mechanism_config(NonMemorialMiner{0.5, 5}, 100, 1, PowerModel::Sampled);
    const auto runs = run_mechanism_repetition(c, 0, {RecordMode::Full, 0});
    for (const auto& r : runs) {
      const auto& t = r.trajectory;
      for (std::size_t j = 1; j < t.size(); ++j) {
        const auto& assigned = r.ledger.p_history[j - 1].strategy;
        CHECK(t.p_series[j] == assigned[t.states[j - 1]]);
        CHECK(t.assigned_payoff[j] == r.ledger.E_history[j]);
      }
    }
  }

  TEST_CASE("convergence detector") {
    std::vector<double> s(100, 0.5);
    CHECK_FALSE(rounds_to_threshold(s).has_value());
    for (std::size_t i = 10; i < 100; ++i) s[i] = 0.995;
    CHECK(rounds_to_threshold(s) == 11u);
    s[30] = 0.9;
    CHECK(rounds_to_threshold(s) == 32u);
    s[80] = 0.9;
    CHECK_FALSE(rounds_to_threshold(s).has_value());
    CHECK(rounds_to_threshold(s, 0.99, 5) == 11u);
    CHECK(rounds_to_threshold(s, 0.99, 30) == 32u);
  }

  TEST_CASE("aggregate mean and standard error") {
    const auto st = aggregate({{1, 2}, {3, 2}, {5, 2}});
    CHECK(st.mean == std::vector<double>{3, 2});
    CHECK(st.stderr_[0] == doctest::Approx(2.0 / std::sqrt(3.0)));
    CHECK(st.stderr_[1] == 0.0);
    CHECK_THROWS_AS(aggregate({{1, 2}, {3}}), std::invalid_argument);
  }

  TEST_CASE("non-memorial miners converge, larger power and larger epsilon no slower") {
    const auto five = run_nonmemorial_experiment(mechanism_config(NonMemorialMiner{0.01, 5}, 500, 100));
    const auto eight = run_nonmemorial_experiment(mechanism_config(NonMemorialMiner{0.01, 8}, 500, 100));
    for (std::size_t i = 0; i < 4; ++i) {
      REQUIRE(five.rounds_to_threshold[i].has_value());
      REQUIRE(eight.rounds_to_threshold[i].has_value());
      CHECK(*five.rounds_to_threshold[3] <= *five.rounds_to_threshold[i]);
      CHECK(*eight.rounds_to_threshold[i] <= *five.rounds_to_threshold[i]);
    }
    const auto high = run_nonmemorial_experiment(mechanism_config(NonMemorialMiner{0.8, 5}, 500, 100));
    for (const auto& q : high.q)
      for (double x : q.mean) CHECK(x >= 0.5);
  }

  TEST_CASE("memorial miners converge with the mechanism") {
    const auto r = run_memorial_experiment(mechanism_config(MemorialMiner{0.5, 0.5}, 500, 100));
    for (std::size_t i = 0; i < 4; ++i) {
      REQUIRE(r.rounds_to_threshold[i].has_value());
      CHECK(r.q[i].mean.back() >= 0.99);
    }
    CHECK(*r.rounds_to_threshold[0] >= *r.rounds_to_threshold[3]);
    CHECK(r.degenerate_events == 0);
  }

  TEST_CASE("memorial traces: W_d never rises across defective rounds, W_c stays above E_m") {
    for (double q0 : {0.01, 0.1, 0.5, 0.8}) {
      const auto c = mechanism_config(MemorialMiner{q0, q0}, 500, 1, PowerModel::Sampled);
      for (std::size_t rep = 0; rep < 10; ++rep) {
        for (const auto& r : run_mechanism_repetition(c, rep, {RecordMode::Full, 500})) {
          const auto& m = r.memorial;
          REQUIRE(m.kinds.size() == 500);
          double last_wd = 1e300;
          for (std::size_t t = 0; t < m.kinds.size(); ++t) {
            const double E = r.ledger.E_history[t];
            CHECK(m.f_m[t] * m.W_c[t] + (1 - m.f_m[t]) * m.W_d[t] == doctest::Approx(E).epsilon(1e-10));
            if (m.kinds[t] == RoundKind::Defective) {
              CHECK(m.W_d[t] <= last_wd + 1e-12);
              last_wd = m.W_d[t];
            } else {
              CHECK(m.W_c[t] >= E - 1e-12);
            }
          }
          for (std::size_t t = 1; t < r.q_series.size(); ++t)
            if (m.kinds[t - 1] == RoundKind::Cooperative) CHECK(r.q_series[t] >= r.q_series[t - 1]);
        }
      }
    }
  }

  TEST_CASE("sampled power model still converges") {
    const auto r = run_memorial_experiment(mechanism_config(MemorialMiner{0.5, 0.5}, 500, 50, PowerModel::Sampled));
    for (const auto& q : r.q) CHECK(q.mean.back() >= 0.99);
  }

  TEST_CASE("long-run payoffs approach the cooperative baseline") {
    const auto coop = long_run_actual_payoffs(mechanism_config(NonMemorialMiner{1.0, 5}, 10000, 4));
    CHECK(std::abs(coop.overall.miner_average - 3.0) < 0.02);
    CHECK(std::abs(coop.overall.pool_average - 3.0) < 0.02);
    const auto mem = long_run_actual_payoffs(mechanism_config(MemorialMiner{0.5, 0.5}, 10000, 4, PowerModel::Sampled));
    for (const auto& s : mem.per_miner) {
      CHECK(std::abs(s.miner_tail - 3.0) < 0.05);
      CHECK(std::abs(s.pool_tail - 3.0) < 0.05);
    }
  }

  TEST_CASE("config validation") {
    auto c = fixed_config(NonMemorialMiner{0.5, 5}, 10);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = mechanism_config(NonMemorialMiner{1.5, 5}, 10, 1);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = mechanism_config(NonMemorialMiner{0.5, 0}, 10, 1);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = mechanism_config(MemorialMiner{0.5, 0.5}, 0, 1);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = mechanism_config(MemorialMiner{0.5, 0.5}, 10, 1);
    c.initial_powers.clear();
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(run_fixed_zd(mechanism_config(ClassicalMiner{}, 10, 1)), std::invalid_argument);
  }

  TEST_CASE("classical miners can face the mechanism") {
    const auto r = run_mechanism_experiment(mechanism_config(ClassicalMiner{ClassicalKind::ALLC}, 200, 3));
    for (const auto& q : r.q)
      for (double x : q.mean) CHECK(x == 1.0);
  }
}
