#include "zdpool/sim_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "zdpool/errors.hpp"
#include "zdpool/tolerances.hpp"
#include "zdpool/zd_control.hpp"

namespace zdpool {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs body(i) for i in [0, n) on a small worker pool. Each index writes only
// its own output slot, so results do not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

bool draw(double probability, Rng& rng) { return uniform01(rng) < probability; }

// Cooperation probability of a non-adaptive miner given the previous state.
std::optional<MixedStrategy> static_miner_strategy(const MinerSpec& spec) {
  if (const auto* c = std::get_if<ClassicalMiner>(&spec)) return as_mixed(c->kind);
  if (const auto* f = std::get_if<FixedMiner>(&spec)) return f->q;
  return std::nullopt;
}

double equalizer_target(const MixedStrategy& p, const Vec4& miner_payoffs) {
  try {
    const auto c = recover_coefficients(p, miner_payoffs);
    if (std::abs(c.beta) > tol::kSingular) return -c.gamma / c.beta;
  } catch (const DomainError&) {
  }
  return kNaN;
}

void push_round(Trajectory& tr, GameState s, const PayoffVectors& payoffs, double q, double p,
                const Vec4& strategy, double assigned) {
  tr.states.push_back(s);
  tr.pool_coop.push_back(pool_cooperated(s));
  tr.miner_coop.push_back(miner_cooperated(s));
  tr.pool_payoffs.push_back(payoffs.pool_at(s));
  tr.miner_payoffs.push_back(payoffs.miner_at(s));
  tr.q_series.push_back(q);
  tr.p_series.push_back(p);
  tr.pool_strategy.push_back(strategy);
  tr.assigned_payoff.push_back(assigned);
}

std::size_t tail_start(std::size_t rounds, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw std::invalid_argument("tail_fraction must lie in (0,1]");
  const auto len = static_cast<std::size_t>(
      std::ceil(static_cast<double>(rounds) * tail_fraction - 1e-9));
  return rounds - std::clamp<std::size_t>(len, 1, rounds);
}

std::vector<std::vector<MinerRun>> run_repetitions(const ExperimentConfig& config,
                                                   const MechanismRunOptions& options) {
  std::vector<std::vector<MinerRun>> runs(config.repetitions);
  parallel_for(config.repetitions,
               [&](std::size_t rep) { runs[rep] = run_mechanism_repetition(config, rep, options); });
  return runs;
}

std::vector<PayoffSummary> summarize_payoffs(const std::vector<std::vector<MinerRun>>& runs,
                                             std::size_t miners, std::size_t rounds) {
  const double reps = static_cast<double>(runs.size());
  const double n = static_cast<double>(rounds);
  std::vector<PayoffSummary> out(miners);
  for (const auto& rep : runs) {
    for (std::size_t i = 0; i < miners; ++i) {
      const MinerRun& r = rep[i];
      const double nt = static_cast<double>(r.tail_rounds);
      out[i].pool_average += r.pool_total / n / reps;
      out[i].miner_average += r.miner_total / n / reps;
      out[i].pool_tail += r.pool_tail_total / nt / reps;
      out[i].miner_tail += r.miner_tail_total / nt / reps;
    }
  }
  return out;
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t repetition, std::uint64_t stream) {
  const auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x & 0xffffffffu); };
  const auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(repetition), hi(repetition), lo(stream), hi(stream)};
  return Rng(seq);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

GameState play_round(double p_coop, double q_coop, Rng& rng) {
  const bool pool = draw(p_coop, rng);
  const bool miner = draw(q_coop, rng);
  return make_state(pool, miner);
}

void ExperimentConfig::validate() const {
  if (rounds == 0) throw std::invalid_argument("rounds must be at least 1");
  if (repetitions == 0) throw std::invalid_argument("repetitions must be at least 1");
  if (initial_powers.empty()) throw std::invalid_argument("at least one miner is required");
  for (double m : initial_powers)
    if (!(m >= 0.0) || !std::isfinite(m))
      throw std::invalid_argument("initial powers must be finite and nonnegative");
  if (!(defect_fraction >= 0.0 && defect_fraction < 1.0))
    throw std::invalid_argument("defect_fraction must lie in [0,1)");

  const auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (const auto* nm = std::get_if<NonMemorialMiner>(&miner)) {
    if (!unit(nm->q0)) throw std::invalid_argument("q0 must lie in [0,1]");
    if (!(nm->epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  }
  if (const auto* mm = std::get_if<MemorialMiner>(&miner)) {
    if (!unit(mm->q0) || !unit(mm->p0)) throw std::invalid_argument("p0 and q0 must lie in [0,1]");
  }
  if (std::holds_alternative<MechanismPool>(pool)) {
    mechanism().validate();
  } else if (!static_miner_strategy(miner)) {
    throw std::invalid_argument("evolutionary miners need a mechanism-driven pool");
  }
}

MechanismConfig ExperimentConfig::mechanism() const {
  const auto* mp = std::get_if<MechanismPool>(&pool);
  if (!mp) throw std::invalid_argument("pool is not mechanism-driven");
  MechanismConfig c;
  c.rounds = rounds;
  c.miners = initial_powers.size();
  c.L = mp->L;
  c.H = mp->H;
  c.zeta = mp->zeta;
  c.payoffs = payoffs;
  return c;
}

FixedRunResult run_fixed_zd(const ExperimentConfig& config, std::size_t repetition,
                            RecordMode mode) {
  config.validate();
  const auto* fixed = std::get_if<FixedPool>(&config.pool);
  if (!fixed) throw std::invalid_argument("run_fixed_zd needs a fixed pool strategy");
  const auto miner = static_miner_strategy(config.miner);
  if (!miner) throw std::invalid_argument("run_fixed_zd needs a classical or fixed miner");

  const MixedStrategy& p = fixed->strategy;
  const double target = equalizer_target(p, config.payoffs.miner);
  Rng rng = make_stream(config.seed, repetition, 0);

  FixedRunResult out;
  out.trajectory.seed = config.seed;
  if (mode != RecordMode::Summary) {
    out.cumulative_miner_average.reserve(config.rounds);
    out.cumulative_pool_average.reserve(config.rounds);
  }
  double pool_sum = 0.0;
  double miner_sum = 0.0;
  GameState prev = config.initial_state;
  for (std::size_t t = 0; t < config.rounds; ++t) {
    const double pc = p[prev];
    const double qc = (*miner)[prev];
    const GameState s = play_round(pc, qc, rng);
    pool_sum += config.payoffs.pool_at(s);
    miner_sum += config.payoffs.miner_at(s);
    if (mode != RecordMode::Summary) {
      const double n = static_cast<double>(t + 1);
      out.cumulative_miner_average.push_back(miner_sum / n);
      out.cumulative_pool_average.push_back(pool_sum / n);
    }
    if (mode == RecordMode::Full) push_round(out.trajectory, s, config.payoffs, qc, pc, p.probs(), target);
    prev = s;
  }
  out.pool_average = pool_sum / static_cast<double>(config.rounds);
  out.miner_average = miner_sum / static_cast<double>(config.rounds);
  return out;
}

SeriesStats aggregate(const std::vector<std::vector<double>>& runs) {
  SeriesStats out;
  if (runs.empty()) return out;
  const std::size_t len = runs.front().size();
  for (const auto& r : runs)
    if (r.size() != len) throw std::invalid_argument("series lengths differ");
  const double n = static_cast<double>(runs.size());
  out.mean.assign(len, 0.0);
  out.stderr_.assign(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    for (const auto& r : runs) sum += r[t];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : runs) ss += (r[t] - mean) * (r[t] - mean);
    out.mean[t] = mean;
    out.stderr_[t] = runs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  }
  return out;
}

FixedExperimentResult run_fixed_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<FixedRunResult> runs(config.repetitions);
  parallel_for(config.repetitions,
               [&](std::size_t rep) { runs[rep] = run_fixed_zd(config, rep, RecordMode::Series); });
  FixedExperimentResult out;
  std::vector<std::vector<double>> series;
  for (auto& r : runs) {
    out.miner_averages.push_back(r.miner_average);
    out.pool_averages.push_back(r.pool_average);
    series.push_back(std::move(r.cumulative_miner_average));
  }
  out.cumulative_miner_average = aggregate(series);
  return out;
}

std::vector<MinerRun> run_mechanism_repetition(const ExperimentConfig& config,
                                               std::size_t repetition,
                                               const MechanismRunOptions& options) {
  config.validate();
  const MechanismConfig mech = config.mechanism();
  const std::size_t miners = config.initial_powers.size();
  const auto static_q = static_miner_strategy(config.miner);
  const auto* nonmemorial = std::get_if<NonMemorialMiner>(&config.miner);
  const auto* memorial = std::get_if<MemorialMiner>(&config.miner);

  const auto reading = [&](double capacity, double q, bool cooperates) {
    if (config.power_model == PowerModel::Expected) return q * capacity;
    return cooperates ? capacity : config.defect_fraction * capacity;
  };
  const auto initial_q = [&]() {
    if (nonmemorial) return nonmemorial->q0;
    if (memorial) return memorial->q0;
    return (*static_q)[config.initial_state];
  };

  // Round 1 couples the miners through the proportional initial reward.
  std::vector<Rng> rngs;
  std::vector<bool> first_action(miners);
  std::vector<double> first_power(miners);
  for (std::size_t i = 0; i < miners; ++i) {
    rngs.push_back(make_stream(config.seed, repetition, i));
    first_action[i] = draw(initial_q(), rngs[i]);
    first_power[i] = reading(config.initial_powers[i], initial_q(), first_action[i]);
  }
  std::vector<MinerLedger> ledgers = open_ledgers(first_power, mech);

  std::vector<MinerRun> out(miners);
  for (std::size_t i = 0; i < miners; ++i) {
    Rng& rng = rngs[i];
    MinerLedger& ledger = ledgers[i];
    MinerRun& run = out[i];
    const double capacity = config.initial_powers[i];
    run.trajectory.seed = config.seed;
    if (options.mode != RecordMode::Summary) run.q_series.reserve(config.rounds);

    double q = initial_q();
    MemorialState mem;
    CooperationHistory history;
    if (memorial) {
      const double e1 = ledger.last_payoff();
      history.pool_prior = memorial->p0;
      history.miner_prior = memorial->q0;
      mem.q = q;
      mem.f_p = memorial->p0;
      mem.f_m = memorial->q0;
      mem.W_d = mech.L;
      mem.W_c = memorial->q0 > 0.0 ? (e1 - (1.0 - memorial->q0) * mech.L) / memorial->q0 : e1;
      mem.E_m = e1;
    }

    GameState prev = config.initial_state;
    for (std::size_t t = 0; t < config.rounds; ++t) {
      if (static_q) q = (*static_q)[prev];
      bool miner_coop = false;
      double pool_prob = 0.0;
      Vec4 strategy_in_force{};
      double delta = 0.0;
      if (t == 0) {
        miner_coop = first_action[i];
        strategy_in_force = ledger.last_strategy().strategy.probs();
        pool_prob = memorial ? memorial->p0 : ledger.last_strategy().strategy[prev];
      } else {
        miner_coop = draw(q, rng);
        strategy_in_force = ledger.last_strategy().strategy.probs();
        pool_prob = ledger.last_strategy().strategy[prev];
        const StepResult r = step(ledger, reading(capacity, q, miner_coop), mech);
        delta = r.delta;
        if (r.clamped) ++run.low_sigmoid_clamps;
      }
      const bool pool_coop = draw(pool_prob, rng);
      const GameState s = make_state(pool_coop, miner_coop);
      const double E = ledger.last_payoff();

      const double pool_payoff = config.payoffs.pool_at(s);
      const double miner_payoff = config.payoffs.miner_at(s);
      run.pool_total += pool_payoff;
      run.miner_total += miner_payoff;
      if (t >= options.tail_start) {
        run.pool_tail_total += pool_payoff;
        run.miner_tail_total += miner_payoff;
        ++run.tail_rounds;
      }
      if (options.mode != RecordMode::Summary) run.q_series.push_back(q);
      if (options.mode == RecordMode::Full)
        push_round(run.trajectory, s, config.payoffs, q, pool_prob, strategy_in_force, E);

      // Cooperation probability for the next round.
      if (nonmemorial) {
        const double offer = quoted_payoff(ledger, capacity, mech);
        q = nonmemorial_update(offer, mech.L, nonmemorial->epsilon);
      } else if (memorial) {
        const bool expected = config.power_model == PowerModel::Expected;
        history.record(expected ? pool_prob : (pool_coop ? 1.0 : 0.0),
                       expected ? q : (miner_coop ? 1.0 : 0.0));
        const RoundKind kind =
            (t == 0 || delta >= 0.0) ? RoundKind::Cooperative : RoundKind::Defective;
        mem.q = q;
        mem = frequency_tracked_w_update(mem, history, kind, E);
        if (options.mode == RecordMode::Full) {
          run.memorial.kinds.push_back(kind);
          run.memorial.W_c.push_back(mem.W_c);
          run.memorial.W_d.push_back(mem.W_d);
          run.memorial.f_m.push_back(mem.f_m);
        }
        const MemorialUpdate u = memorial_update(mem);
        if (u.degenerate) ++run.degenerate_events;
        q = u.q;
        mem.q = q;
      }
      prev = s;
    }
    if (options.mode == RecordMode::Full) run.ledger = std::move(ledger);
  }
  return out;
}

std::optional<std::size_t> rounds_to_threshold(std::span<const double> series, double threshold,
                                               std::size_t hold) {
  if (hold == 0) hold = 1;
  std::size_t run = 0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    run = series[t] >= threshold ? run + 1 : 0;
    if (run == hold) return t + 2 - hold;
  }
  return std::nullopt;
}

EvolutionResult run_mechanism_experiment(const ExperimentConfig& config, double tail_fraction) {
  config.validate();
  auto runs = run_repetitions(
      config, {RecordMode::Series, tail_start(config.rounds, tail_fraction)});

  EvolutionResult out;
  const std::size_t miners = config.initial_powers.size();
  out.payoffs = summarize_payoffs(runs, miners, config.rounds);
  for (std::size_t i = 0; i < miners; ++i) {
    std::vector<std::vector<double>> series;
    series.reserve(runs.size());
    for (auto& rep : runs) {
      out.low_sigmoid_clamps += rep[i].low_sigmoid_clamps;
      out.degenerate_events += rep[i].degenerate_events;
      series.push_back(std::move(rep[i].q_series));
    }
    out.q.push_back(aggregate(series));
    out.rounds_to_threshold.push_back(rounds_to_threshold(out.q.back().mean));
  }
  return out;
}

EvolutionResult run_nonmemorial_experiment(const ExperimentConfig& config) {
  if (!std::holds_alternative<NonMemorialMiner>(config.miner))
    throw std::invalid_argument("run_nonmemorial_experiment needs a non-memorial miner");
  return run_mechanism_experiment(config);
}

EvolutionResult run_memorial_experiment(const ExperimentConfig& config) {
  if (!std::holds_alternative<MemorialMiner>(config.miner))
    throw std::invalid_argument("run_memorial_experiment needs a memorial miner");
  return run_mechanism_experiment(config);
}

LongRunResult long_run_actual_payoffs(const ExperimentConfig& config, double tail_fraction) {
  config.validate();
  const auto runs = run_repetitions(
      config, {RecordMode::Summary, tail_start(config.rounds, tail_fraction)});
  const std::size_t miners = config.initial_powers.size();
  LongRunResult out;
  out.per_miner = summarize_payoffs(runs, miners, config.rounds);
  const double m = static_cast<double>(miners);
  for (const auto& s : out.per_miner) {
    out.overall.pool_average += s.pool_average / m;
    out.overall.miner_average += s.miner_average / m;
    out.overall.pool_tail += s.pool_tail / m;
    out.overall.miner_tail += s.miner_tail / m;
  }
  return out;
}

}  // namespace zdpool
