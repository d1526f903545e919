#include "zdpool/cli/commands.hpp"

#include <fstream>
#include <limits>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "zdpool/errors.hpp"
#include "zdpool/sim_engine.hpp"
#include "zdpool/tolerances.hpp"
#include "zdpool/zd_control.hpp"

namespace zdpool::cli {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string short_number(double x) { return fmt::format("{:.6g}", x == 0.0 ? 0.0 : x); }

std::string tuple_text(const Vec4& v) {
  return fmt::format("({}, {}, {}, {})", short_number(v[0]), short_number(v[1]), short_number(v[2]),
                     short_number(v[3]));
}

json inequality_json(const Inequality& i) {
  return json{{"name", i.name}, {"lhs", i.lhs}, {"rhs", i.rhs}, {"holds", i.holds}};
}

// Per-case results gathered before any file is written.
struct SeriesBlock {
  std::size_t miner = 0;
  double initial_power = kNaN;
  SeriesStats stats;
};

struct SummaryRow {
  std::size_t miner = 0;
  double initial_power = kNaN;
  double final_mean = kNaN;
  double final_stderr = kNaN;
  std::optional<std::size_t> rounds_to_threshold;
  PayoffSummary payoffs{kNaN, kNaN, kNaN, kNaN};
  double exact_miner_payoff = kNaN;
};

struct CaseOutput {
  std::vector<SeriesBlock> series;
  std::vector<SummaryRow> summary;
  std::vector<std::pair<std::size_t, std::vector<Trajectory>>> trajectories;  // (rep, per miner)
};

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? kNaN : s / static_cast<double>(xs.size());
}

CaseOutput run_case(const ExperimentConfig& config, const SimulationPlan& plan, bool want_trajectories) {
  CaseOutput out;
  const std::size_t traj_reps = want_trajectories ? std::min(plan.trajectory_repetitions, config.repetitions) : 0;
  if (const auto* fixed = std::get_if<FixedPool>(&config.pool)) {
    const FixedExperimentResult r = run_fixed_experiment(config);
    SummaryRow row;
    row.final_mean = r.cumulative_miner_average.mean.back();
    row.final_stderr = r.cumulative_miner_average.stderr_.back();
    row.payoffs.pool_average = mean_of(r.pool_averages);
    row.payoffs.miner_average = mean_of(r.miner_averages);
    MixedStrategy q;
    if (const auto* c = std::get_if<ClassicalMiner>(&config.miner)) q = as_mixed(c->kind);
    if (const auto* f = std::get_if<FixedMiner>(&config.miner)) q = f->q;
    row.exact_miner_payoff = expected_payoffs(fixed->strategy, q, config.payoffs, config.initial_state).miner;
    out.summary.push_back(row);
    out.series.push_back({0, kNaN, r.cumulative_miner_average});
    for (std::size_t rep = 0; rep < traj_reps; ++rep)
      out.trajectories.push_back({rep, {run_fixed_zd(config, rep, RecordMode::Full).trajectory}});
    return out;
  }

  const EvolutionResult r = run_mechanism_experiment(config, plan.tail_fraction);
  for (std::size_t i = 0; i < config.initial_powers.size(); ++i) {
    SummaryRow row;
    row.miner = i;
    row.initial_power = config.initial_powers[i];
    row.final_mean = r.q[i].mean.back();
    row.final_stderr = r.q[i].stderr_.back();
    row.rounds_to_threshold = r.rounds_to_threshold[i];
    row.payoffs = r.payoffs[i];
    out.summary.push_back(row);
    out.series.push_back({i, config.initial_powers[i], r.q[i]});
  }
  for (std::size_t rep = 0; rep < traj_reps; ++rep) {
    MechanismRunOptions options{RecordMode::Full, config.rounds};
    std::vector<Trajectory> per_miner;
    for (auto& run : run_mechanism_repetition(config, rep, options)) per_miner.push_back(std::move(run.trajectory));
    out.trajectories.push_back({rep, std::move(per_miner)});
  }
  return out;
}

void add_game_options(CLI::App& app, GameParameters& p) {
  app.add_option("--kp", p.K_p, "Pool base payoff K_p")->capture_default_str();
  app.add_option("--km", p.K_m, "Miner base payoff K_m")->capture_default_str();
  app.add_option("--pi", p.pi, "Pool loss when the miner defects")->capture_default_str();
  app.add_option("--mu", p.mu, "Pool gain from defecting")->capture_default_str();
  app.add_option("--sigma", p.sigma, "Miner gain from defecting")->capture_default_str();
  app.add_option("--rho", p.rho, "Miner loss when the pool defects")->capture_default_str();
}

constexpr const char* kFooter = R"(Exit codes: 0 success, 1 domain error (infeasible or invalid math input), 2 usage error.
Output directory: --out, else $ZDPOOL_OUT_DIR, else ./zdpool_out.

CSV columns (schema version 1):
  trajectory.csv  case, rep, miner, round, state, pool_payoff, miner_payoff, q_t, p1, p2, p3, p4, E
                  q_t and p1..p4 are the probabilities in force that round; E is the payoff the
                  pool's strategy assigns (empty when it pins none).
  series.csv      case, miner, initial_power, round, mean, stderr
                  fixed pool: running average of the miner's payoff; mechanism: q_t.
  summary.csv     case, miner, initial_power, repetitions, rounds, final_mean, final_stderr,
                  rounds_to_threshold, pool_average, miner_average, pool_tail, miner_tail,
                  exact_miner_payoff
  replicate writes figN_series.csv and figN_summary.csv with the same columns.)";

void print_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

}  // namespace

json classify_report(const GameParameters& params) {
  const ClassificationReport r = classify_game(params);
  const PayoffVectors pv = build_payoff_vectors(params);
  json stated = json::array();
  std::vector<std::string> verdicts;
  for (const auto& i : r.stated) {
    stated.push_back(inequality_json(i));
    verdicts.push_back(fmt::format("{} {}", i.name, i.holds ? "holds" : "fails"));
  }
  json derived = json::array();
  for (const auto& i : r.derived) derived.push_back(inequality_json(i));
  return json{
      {"classification", std::string(to_string(r.kind))},
      {"parameters", game_to_json(params)},
      {"payoffs", {{"pool", pv.pool}, {"miner", pv.miner}}},
      {"inequalities", stated},
      {"derived", derived},
      {"is_pd", r.is_pd},
      {"iterated_condition", r.iterated_condition},
      {"summary", fmt::format("{}: {}", to_string(r.kind), fmt::join(verdicts, ", "))},
  };
}

json zd_derive_report(double p1, double p4, const PayoffVectors& payoffs) {
  const P2P3 d = derive_p2_p3(p1, p4, payoffs.miner);
  const bool feasible = d.feasible(tol::kStructural);
  json report{
      {"p1", p1},
      {"p4", p4},
      {"p2", d.p2},
      {"p3", d.p3},
      {"feasible", feasible},
      {"summary", fmt::format("({}, {}), {}", short_number(d.p2), short_number(d.p3),
                              feasible ? "feasible" : "infeasible")},
  };
  try {
    report["controlled_payoff"] = controlled_payoff(p1, p4, payoffs.miner);
  } catch (const DomainError&) {
    report["controlled_payoff"] = nullptr;
  }
  return report;
}

json zd_target_report(double target, const PayoffVectors& payoffs, double safety) {
  const double lambda_max = max_feasible_lambda(target, payoffs.miner);
  const ZDStrategy zd = strategy_for_target(target, payoffs.miner, safety);
  const Vec4& p = zd.strategy.probs();
  const double achieved = controlled_payoff(p[0], p[3], payoffs.miner);
  return json{
      {"target", target},
      {"strategy", p},
      {"lambda", safety * lambda_max},
      {"lambda_max", lambda_max},
      {"controlled_payoff", achieved},
      {"coefficients", {{"beta", zd.coefficients.beta}, {"gamma", zd.coefficients.gamma}}},
      {"summary", fmt::format("p = {}, controlled payoff {}", tuple_text(p), short_number(achieved))},
  };
}

json zd_self_control_report(const PayoffVectors& payoffs, double grid_step) {
  const SelfControlReport r = self_control_report(payoffs.pool, grid_step);
  json feasible = json::array();
  std::vector<std::string> texts;
  for (const auto& pt : r.feasible) {
    feasible.push_back(json{{"strategy", Vec4{pt.p1, pt.p2, pt.p3, pt.p4}}, {"alpha", pt.alpha}, {"gamma", pt.gamma}});
    texts.push_back(tuple_text(Vec4{pt.p1, pt.p2, pt.p3, pt.p4}));
  }
  return json{
      {"grid_step", r.grid_step},
      {"points", r.points},
      {"p2_violations", r.p2_violations},
      {"p3_violations", r.p3_violations},
      {"feasible", feasible},
      {"summary", fmt::format("{} feasible of {} grid points{}{}", r.feasible.size(), r.points,
                              texts.empty() ? "" : ": ", fmt::join(texts, ", "))},
  };
}

RunManifest execute_plan(const SimulationPlan& plan, const std::filesystem::path& dir, const PlanFiles& files) {
  prepare_output_dir(dir);
  std::vector<CaseOutput> results;
  results.reserve(plan.cases.size());
  for (const auto& c : plan.cases) results.push_back(run_case(c.config, plan, !files.trajectory.empty()));

  RunManifest manifest;
  manifest.config_digest = config_digest(plan.resolved);
  manifest.seed = plan.cases.empty() ? 0 : plan.cases.front().config.seed;
  manifest.timestamp = utc_timestamp();

  if (!files.trajectory.empty()) {
    CsvWriter csv(dir / files.trajectory, {"case", "rep", "miner", "round", "state", "pool_payoff", "miner_payoff",
                                           "q_t", "p1", "p2", "p3", "p4", "E"});
    for (std::size_t k = 0; k < plan.cases.size(); ++k) {
      for (const auto& [rep, per_miner] : results[k].trajectories) {
        for (std::size_t i = 0; i < per_miner.size(); ++i) {
          const Trajectory& t = per_miner[i];
          for (std::size_t r = 0; r < t.size(); ++r) {
            const Vec4& p = t.pool_strategy[r];
            csv.row({plan.cases[k].label, rep, i, r + 1, to_string(t.states[r]), t.pool_payoffs[r],
                     t.miner_payoffs[r], t.q_series[r], p[0], p[1], p[2], p[3], t.assigned_payoff[r]});
          }
        }
      }
    }
    csv.close();
    manifest.outputs.push_back(files.trajectory);
  }
  if (!files.series.empty()) {
    CsvWriter csv(dir / files.series, {"case", "miner", "initial_power", "round", "mean", "stderr"});
    for (std::size_t k = 0; k < plan.cases.size(); ++k)
      for (const auto& block : results[k].series)
        for (std::size_t r = 0; r < block.stats.mean.size(); ++r)
          csv.row({plan.cases[k].label, block.miner, block.initial_power, r + 1, block.stats.mean[r],
                   block.stats.stderr_[r]});
    csv.close();
    manifest.outputs.push_back(files.series);
  }
  if (!files.summary.empty()) {
    CsvWriter csv(dir / files.summary,
                  {"case", "miner", "initial_power", "repetitions", "rounds", "final_mean", "final_stderr",
                   "rounds_to_threshold", "pool_average", "miner_average", "pool_tail", "miner_tail",
                   "exact_miner_payoff"});
    for (std::size_t k = 0; k < plan.cases.size(); ++k) {
      const ExperimentConfig& c = plan.cases[k].config;
      for (const auto& row : results[k].summary)
        csv.row({plan.cases[k].label, row.miner, row.initial_power, c.repetitions, c.rounds, row.final_mean,
                 row.final_stderr, row.rounds_to_threshold, row.payoffs.pool_average, row.payoffs.miner_average,
                 row.payoffs.pool_tail, row.payoffs.miner_tail, row.exact_miner_payoff});
    }
    csv.close();
    manifest.outputs.push_back(files.summary);
  }
  manifest.outputs.push_back("manifest.json");
  write_manifest(dir, manifest);
  return manifest;
}

RunManifest cmd_simulate(const std::filesystem::path& config_path, const std::filesystem::path& dir) {
  return execute_plan(load_simulation_config(config_path), dir, PlanFiles{});
}

json replicate_config(const ReplicateOptions& options) {
  if (options.figure < 1 || options.figure > 4)
    throw UsageError(fmt::format("figure must be 1, 2, 3 or 4, got {}", options.figure));
  if (options.repetitions == 0) throw UsageError("repetitions must be at least 1");
  const std::vector<double> q0{0.01, 0.1, 0.5, 0.8};
  json j{
      {"game", game_to_json(default_game_parameters())},
      {"repetitions", options.repetitions},
      {"seed", options.seed},
      {"initial_state", "CC"},
      {"trajectory_repetitions", 0},
  };
  if (options.figure == 1) {
    j["rounds"] = options.rounds.value_or(10000);
    j["pool"] = {{"type", "fixed"}, {"strategy", {0.9, 0.3, 0.8, 0.2}}};
    j["miner"] = {{"type", "classical"}, {"kind", {"ALLC", "ALLD", "TFT", "WSLS"}}};
    return j;
  }
  j["rounds"] = options.rounds.value_or(500);
  j["initial_powers"] = {1.0, 2.0, 3.0, 4.0};
  j["power_model"] = "expected";
  j["pool"] = {{"type", "mechanism"}, {"L", 2.0}, {"H", 3.0}, {"zeta", 3.0}};
  if (options.figure == 4)
    j["miner"] = {{"type", "memorial"}, {"q0", q0}, {"p0", "q0"}};
  else
    j["miner"] = {{"type", "nonmemorial"}, {"q0", q0}, {"epsilon", options.figure == 2 ? 5.0 : 8.0}};
  return j;
}

RunManifest cmd_replicate(const ReplicateOptions& options, const std::filesystem::path& dir) {
  const SimulationPlan plan = parse_simulation_config(replicate_config(options));
  PlanFiles files;
  files.series = fmt::format("fig{}_series.csv", options.figure);
  files.summary = fmt::format("fig{}_summary.csv", options.figure);
  files.trajectory.clear();
  return execute_plan(plan, dir, files);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-determinant pooled-mining simulator", "zdpool"};
  app.footer(kFooter);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  GameParameters game = default_game_parameters();
  std::string classify_config;
  auto* classify = app.add_subcommand("classify", "Classify the game and report each inequality; exit 0 iff IPD");
  add_game_options(*classify, game);
  classify->add_option("--config", classify_config, "JSON file with kp, km, pi, mu, sigma, rho (or a \"game\" object)")
      ->check(CLI::ExistingFile);

  auto* zd = app.add_subcommand("zd", "Zero-determinant strategy tools");
  zd->require_subcommand(1);
  double p1 = 0.0, p4 = 0.0, target = 0.0, safety = kLambdaSafety, step = 0.01;
  auto* derive = zd->add_subcommand("derive", "p2, p3 forced by p1, p4 and their feasibility");
  derive->add_option("--p1", p1, "Cooperation probability after CC")->required()->check(CLI::Range(0.0, 1.0));
  derive->add_option("--p4", p4, "Cooperation probability after DD")->required()->check(CLI::Range(0.0, 1.0));
  add_game_options(*derive, game);
  auto* tgt = zd->add_subcommand("target", "Synthesize a strategy pinning the miner's payoff");
  tgt->add_option("--payoff", target, "Target miner payoff in [S_m[DD], S_m[CC]]")->required();
  tgt->add_option("--safety", safety, "Fraction of the largest feasible step")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  add_game_options(*tgt, game);
  auto* self = zd->add_subcommand("self-control", "Grid search for strategies pinning the pool's own payoff");
  self->add_option("--step", step, "Grid step on [0,1]")->capture_default_str();
  add_game_options(*self, game);

  std::string config_path, out_dir;
  auto* simulate = app.add_subcommand("simulate", "Run a JSON-configured experiment");
  simulate->add_option("config", config_path, "Experiment config (JSON)")->required();
  simulate->add_option("--out", out_dir, "Output directory");

  ReplicateOptions rep;
  std::size_t rep_rounds = 0;
  auto* replicate = app.add_subcommand("replicate", "Regenerate a preset figure's datasets (1-4)");
  replicate->add_option("figure", rep.figure, "Figure number")->required()->check(CLI::Range(1, 4));
  replicate->add_option("--out", out_dir, "Output directory");
  replicate->add_option("--seed", rep.seed, "Base seed")->capture_default_str();
  replicate->add_option("--repetitions", rep.repetitions, "Repetitions")->capture_default_str();
  auto* rounds_opt = replicate->add_option("--rounds", rep_rounds, "Horizon (default: preset)");

  std::vector<const char*> argv{"zdpool"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*classify) {
      if (!classify_config.empty()) {
        const GameParameters flags = game;
        std::ifstream in(classify_config);
        json j;
        try {
          j = json::parse(in);
        } catch (const json::parse_error& e) {
          throw UsageError(fmt::format("config file '{}' is not valid JSON: {}", classify_config, e.what()));
        }
        game = game_from_json(j.contains("game") ? j.at("game") : j);
        const auto override_if = [&](const char* name, double value, double& slot) {
          if (classify->count(name) > 0) slot = value;
        };
        override_if("--kp", flags.K_p, game.K_p);
        override_if("--km", flags.K_m, game.K_m);
        override_if("--pi", flags.pi, game.pi);
        override_if("--mu", flags.mu, game.mu);
        override_if("--sigma", flags.sigma, game.sigma);
        override_if("--rho", flags.rho, game.rho);
      }
      game.validate();
      const json report = classify_report(game);
      print_json(out, report);
      return report["classification"] == "IPD" ? kExitOk : kExitDomain;
    }
    if (*derive) {
      game.validate();
      const json report = zd_derive_report(p1, p4, build_payoff_vectors(game));
      print_json(out, report);
      return report["feasible"].get<bool>() ? kExitOk : kExitDomain;
    }
    if (*tgt) {
      game.validate();
      print_json(out, zd_target_report(target, build_payoff_vectors(game), safety));
      return kExitOk;
    }
    if (*self) {
      game.validate();
      print_json(out, zd_self_control_report(build_payoff_vectors(game), step));
      return kExitOk;
    }
    if (*simulate) {
      const auto dir = resolve_output_dir(out_dir);
      const RunManifest m = cmd_simulate(config_path, dir);
      print_json(out, m.to_json());
      return kExitOk;
    }
    if (*replicate) {
      if (rounds_opt->count() > 0) rep.rounds = rep_rounds;
      const auto dir = resolve_output_dir(out_dir);
      const RunManifest m = cmd_replicate(rep, dir);
      print_json(out, m.to_json());
      return kExitOk;
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "error: malformed config: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace zdpool::cli
