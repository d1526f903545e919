#include "zdpool/cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>

#include "zdpool/miner_strategies.hpp"

namespace zdpool::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto k : allowed) known = known || item.key() == k;
    if (!known) throw UsageError(fmt::format("unknown key '{}' in {}", item.key(), where));
  }
}

const json& object_at(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_object()) throw UsageError(fmt::format("'{}' must be an object", key));
  return v;
}

double number(const json& v, std::string_view what) {
  if (!v.is_number()) throw UsageError(fmt::format("'{}' must be a number", what));
  return v.get<double>();
}

std::uint64_t count(const json& v, std::string_view what) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw UsageError(fmt::format("'{}' must be a nonnegative integer", what));
  return v.get<std::uint64_t>();
}

// A scalar or a non-empty array of numbers.
std::vector<double> number_list(const json& v, std::string_view what) {
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& x : v) out.push_back(number(x, what));
  } else {
    out.push_back(number(v, what));
  }
  if (out.empty()) throw UsageError(fmt::format("'{}' must not be empty", what));
  return out;
}

Vec4 four_numbers(const json& v, std::string_view what) {
  const auto xs = number_list(v, what);
  if (xs.size() != 4) throw UsageError(fmt::format("'{}' needs four entries (CC, CD, DC, DD)", what));
  return Vec4{xs[0], xs[1], xs[2], xs[3]};
}

json list_json(const std::vector<double>& xs) { return json(xs); }

PowerModel parse_power_model(const std::string& s) {
  if (s == "sampled") return PowerModel::Sampled;
  if (s == "expected") return PowerModel::Expected;
  throw UsageError(fmt::format("power_model must be 'sampled' or 'expected', got '{}'", s));
}

std::string label_number(double x) { return fmt::format("{:g}", x); }

}  // namespace

GameParameters default_game_parameters() {
  GameParameters p;
  p.K_p = 3.0;
  p.K_m = 3.0;
  p.pi = 3.0;
  p.mu = 2.0;
  p.sigma = 2.0;
  p.rho = 3.0;
  return p;
}

GameParameters game_from_json(const json& j, GameParameters base) {
  if (!j.is_object()) throw UsageError("game parameters must be an object");
  reject_unknown(j, "game", {"kp", "km", "pi", "mu", "sigma", "rho"});
  const auto read = [&](const char* key, double& slot) {
    if (j.contains(key)) slot = number(j.at(key), key);
  };
  read("kp", base.K_p);
  read("km", base.K_m);
  read("pi", base.pi);
  read("mu", base.mu);
  read("sigma", base.sigma);
  read("rho", base.rho);
  base.validate();
  return base;
}

json game_to_json(const GameParameters& p) {
  return json{{"kp", p.K_p}, {"km", p.K_m}, {"pi", p.pi}, {"mu", p.mu}, {"sigma", p.sigma}, {"rho", p.rho}};
}

SimulationPlan parse_simulation_config(const json& j) {
  if (!j.is_object()) throw UsageError("config must be an object");
  std::vector<std::string_view> missing;
  for (auto key : kRequiredKeys)
    if (!j.contains(key)) missing.push_back(key);
  if (!missing.empty())
    throw UsageError(fmt::format("config is missing required keys: {}", fmt::join(missing, ", ")));
  reject_unknown(j, "config",
                 {"game", "rounds", "repetitions", "seed", "initial_state", "initial_powers", "power_model",
                  "defect_fraction", "pool", "miner", "trajectory_repetitions", "tail_fraction"});

  ExperimentConfig base;
  const GameParameters game = j.contains("game") ? game_from_json(j.at("game")) : default_game_parameters();
  base.payoffs = build_payoff_vectors(game);
  base.rounds = count(j.at("rounds"), "rounds");
  base.repetitions = j.contains("repetitions") ? count(j.at("repetitions"), "repetitions") : 1;
  base.seed = count(j.at("seed"), "seed");
  if (j.contains("initial_state")) {
    const auto s = parse_state(j.at("initial_state").get<std::string>());
    if (!s) throw UsageError("initial_state must be one of CC, CD, DC, DD");
    base.initial_state = *s;
  }
  if (j.contains("initial_powers")) base.initial_powers = number_list(j.at("initial_powers"), "initial_powers");
  if (j.contains("power_model")) base.power_model = parse_power_model(j.at("power_model").get<std::string>());
  if (j.contains("defect_fraction")) base.defect_fraction = number(j.at("defect_fraction"), "defect_fraction");

  SimulationPlan plan;
  if (j.contains("trajectory_repetitions"))
    plan.trajectory_repetitions = count(j.at("trajectory_repetitions"), "trajectory_repetitions");
  if (j.contains("tail_fraction")) plan.tail_fraction = number(j.at("tail_fraction"), "tail_fraction");

  json resolved_pool;
  const json& pool = object_at(j, "pool");
  const std::string pool_type = pool.value("type", "");
  if (pool_type == "fixed") {
    reject_unknown(pool, "pool", {"type", "strategy", "target"});
    if (pool.contains("strategy") == pool.contains("target"))
      throw UsageError("fixed pool needs exactly one of 'strategy' or 'target'");
    Vec4 p{};
    if (pool.contains("strategy")) {
      p = four_numbers(pool.at("strategy"), "pool.strategy");
    } else {
      p = strategy_for_target(number(pool.at("target"), "pool.target"), base.payoffs.miner).strategy.probs();
    }
    base.pool = FixedPool{MixedStrategy(p)};
    resolved_pool = json{{"type", "fixed"}, {"strategy", p}};
  } else if (pool_type == "mechanism") {
    reject_unknown(pool, "pool", {"type", "L", "H", "zeta"});
    MechanismPool mp{base.payoffs.miner[3], base.payoffs.miner[0], 3.0};
    if (pool.contains("L")) mp.L = number(pool.at("L"), "pool.L");
    if (pool.contains("H")) mp.H = number(pool.at("H"), "pool.H");
    if (pool.contains("zeta")) mp.zeta = number(pool.at("zeta"), "pool.zeta");
    base.pool = mp;
    resolved_pool = json{{"type", "mechanism"}, {"L", mp.L}, {"H", mp.H}, {"zeta", mp.zeta}};
  } else {
    throw UsageError("pool.type must be 'fixed' or 'mechanism'");
  }

  json resolved_miner;
  const json& miner = object_at(j, "miner");
  const std::string miner_type = miner.value("type", "");
  const auto add = [&](std::string label, MinerSpec spec) {
    ExperimentConfig c = base;
    c.miner = std::move(spec);
    c.validate();
    plan.cases.push_back({std::move(label), std::move(c)});
  };
  if (miner_type == "classical") {
    reject_unknown(miner, "miner", {"type", "kind"});
    json kinds = miner.at("kind");
    if (!kinds.is_array()) kinds = json::array({kinds});
    std::vector<std::string> names;
    for (const auto& k : kinds) {
      const auto kind = parse_classical(k.get<std::string>());
      if (!kind) throw UsageError(fmt::format("unknown classical miner '{}'", k.get<std::string>()));
      names.emplace_back(to_string(*kind));
      add(names.back(), ClassicalMiner{*kind});
    }
    resolved_miner = json{{"type", "classical"}, {"kind", names}};
  } else if (miner_type == "fixed") {
    reject_unknown(miner, "miner", {"type", "q"});
    const Vec4 q = four_numbers(miner.at("q"), "miner.q");
    add("fixed", FixedMiner{MixedStrategy(q)});
    resolved_miner = json{{"type", "fixed"}, {"q", q}};
  } else if (miner_type == "nonmemorial") {
    reject_unknown(miner, "miner", {"type", "q0", "epsilon"});
    const auto q0s = number_list(miner.at("q0"), "miner.q0");
    const auto eps = miner.contains("epsilon") ? number_list(miner.at("epsilon"), "miner.epsilon")
                                               : std::vector<double>{NonMemorialMiner{}.epsilon};
    for (double e : eps)
      for (double q0 : q0s)
        add(fmt::format("q0={};epsilon={}", label_number(q0), label_number(e)), NonMemorialMiner{q0, e});
    resolved_miner = json{{"type", "nonmemorial"}, {"q0", list_json(q0s)}, {"epsilon", list_json(eps)}};
  } else if (miner_type == "memorial") {
    reject_unknown(miner, "miner", {"type", "q0", "p0"});
    const auto q0s = number_list(miner.at("q0"), "miner.q0");
    const json p0 = miner.value("p0", json("q0"));
    if (p0.is_string()) {
      if (p0.get<std::string>() != "q0") throw UsageError("miner.p0 must be a number, a list or \"q0\"");
      for (double q0 : q0s) add(fmt::format("q0={};p0={}", label_number(q0), label_number(q0)), MemorialMiner{q0, q0});
      resolved_miner = json{{"type", "memorial"}, {"q0", list_json(q0s)}, {"p0", "q0"}};
    } else {
      const auto p0s = number_list(p0, "miner.p0");
      for (double p : p0s)
        for (double q0 : q0s)
          add(fmt::format("q0={};p0={}", label_number(q0), label_number(p)), MemorialMiner{q0, p});
      resolved_miner = json{{"type", "memorial"}, {"q0", list_json(q0s)}, {"p0", list_json(p0s)}};
    }
  } else {
    throw UsageError("miner.type must be one of classical, fixed, nonmemorial, memorial");
  }

  if (!(plan.tail_fraction > 0.0 && plan.tail_fraction <= 1.0))
    throw UsageError("tail_fraction must lie in (0,1]");

  plan.resolved = json{
      {"game", game_to_json(game)},
      {"rounds", base.rounds},
      {"repetitions", base.repetitions},
      {"seed", base.seed},
      {"initial_state", std::string(to_string(base.initial_state))},
      {"initial_powers", base.initial_powers},
      {"power_model", base.power_model == PowerModel::Expected ? "expected" : "sampled"},
      {"defect_fraction", base.defect_fraction},
      {"pool", resolved_pool},
      {"miner", resolved_miner},
      {"trajectory_repetitions", plan.trajectory_repetitions},
      {"tail_fraction", plan.tail_fraction},
  };
  return plan;
}

SimulationPlan load_simulation_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("cannot read config file '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw UsageError(fmt::format("config file is empty; required keys: {}", fmt::join(kRequiredKeys, ", ")));
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(fmt::format("config file '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return parse_simulation_config(j);
}

}  // namespace zdpool::cli
