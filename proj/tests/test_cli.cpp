#include <doctest.h>

#include <stdexcept>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "zdpool/cli/commands.hpp"

using namespace zdpool;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("zdpool_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& row) {
  std::vector<std::string> cols;
  std::stringstream in(row);
  for (std::string c; std::getline(in, c, ',');) cols.push_back(c);
  return cols;
}

nlohmann::json parse(const std::string& s) { return nlohmann::json::parse(s); }

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body) {
  fs::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("classify reports IPD for the default game") {
    const auto r = invoke({"classify", "--kp", "3", "--km", "3", "--pi", "3", "--mu", "2", "--sigma", "2", "--rho", "3"});
    CHECK(r.code == 0);
    const auto j = parse(r.out);
    CHECK(j["classification"] == "IPD");
    CHECK(j["inequalities"].size() == 4);
    CHECK(j["summary"] == "IPD: pi > mu holds, rho > sigma holds, mu < rho holds, sigma < pi holds");
  }

  TEST_CASE("classify boundary case exits nonzero") {
    const auto r = invoke({"classify", "--pi", "1", "--mu", "1", "--sigma", "1", "--rho", "1"});
    CHECK(r.code == cli::kExitDomain);
    CHECK(parse(r.out)["classification"] == "neither");
  }

  TEST_CASE("classify from a config file matches flags") {
    const auto dir = scratch_dir("classify");
    const auto path = write_config(dir, "game.json", R"({"game": {"kp": 10, "km": 5, "pi": 4, "mu": 1, "sigma": 1, "rho": 2}})");
    const auto a = invoke({"classify", "--config", path.string()});
    const auto b = invoke({"classify", "--kp", "10", "--km", "5", "--pi", "4", "--mu", "1", "--sigma", "1", "--rho", "2"});
    CHECK(a.code == b.code);
    CHECK(a.out == b.out);
    fs::remove_all(dir);
  }

  TEST_CASE("malformed flags are usage errors") {
    CHECK(invoke({"classify", "--pi", "abc"}).code == cli::kExitUsage);
    CHECK(invoke({"classify", "--unknown"}).code == cli::kExitUsage);
    CHECK(invoke({}).code == cli::kExitUsage);
    CHECK(invoke({"classify", "--pi", "-1"}).code == cli::kExitUsage);
    CHECK(invoke({"--help"}).code == 0);
  }

  TEST_CASE("help documents the CSV columns") {
    const auto r = invoke({"--help"});
    CHECK(r.out.find("case, rep, miner, round, state, pool_payoff, miner_payoff, q_t, p1, p2, p3, p4, E") !=
          std::string::npos);
    CHECK(r.out.find("ZDPOOL_OUT_DIR") != std::string::npos);
  }

  TEST_CASE("zd derive") {
    auto r = invoke({"zd", "derive", "--p1", "0.9", "--p4", "0.2"});
    CHECK(r.code == 0);
    CHECK(parse(r.out)["summary"] == "(0.3, 0.8), feasible");
    r = invoke({"zd", "derive", "--p1", "0", "--p4", "1"});
    CHECK(r.code == cli::kExitDomain);
    CHECK(parse(r.out)["summary"] == "(-4, 5), infeasible");
    CHECK(invoke({"zd", "derive", "--p1", "1.5", "--p4", "0"}).code == cli::kExitUsage);
  }

  TEST_CASE("zd target") {
    auto r = invoke({"zd", "target", "--payoff", "3"});
    CHECK(r.code == 0);
    const auto j = parse(r.out);
    CHECK(j["controlled_payoff"].get<double>() == doctest::Approx(3.0).epsilon(1e-12));
    for (double x : j["strategy"]) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    r = invoke({"zd", "target", "--payoff", "9"});
    CHECK(r.code == cli::kExitDomain);
    CHECK(r.err.find("outside") != std::string::npos);
  }

  TEST_CASE("zd self-control") {
    const auto r = invoke({"zd", "self-control", "--step", "0.01"});
    CHECK(r.code == 0);
    const auto j = parse(r.out);
    CHECK(j["points"] == 10201);
    CHECK(j["feasible"].size() == 1);
    CHECK(j["summary"] == "1 feasible of 10201 grid points: (1, 1, 0, 0)");
  }

  TEST_CASE("simulate writes trajectory, series, summary and manifest") {
    const auto dir = scratch_dir("simulate");
    const auto cfg = write_config(dir, "fig1.json", R"({
      "rounds": 20000, "repetitions": 20, "seed": 3,
      "pool": {"type": "fixed", "strategy": [0.9, 0.3, 0.8, 0.2]},
      "miner": {"type": "classical", "kind": ["ALLC", "ALLD", "TFT", "WSLS"]}
    })");
    const auto out = dir / "out";
    const auto r = invoke({"simulate", cfg.string(), "--out", out.string()});
    REQUIRE(r.code == 0);
    const auto traj = lines(slurp(out / "trajectory.csv"));
    CHECK(traj[0] == "case,rep,miner,round,state,pool_payoff,miner_payoff,q_t,p1,p2,p3,p4,E");
    CHECK(traj.size() == 1 + 4 * 20000);
    const auto summary = lines(slurp(out / "summary.csv"));
    CHECK(summary[0] ==
          "case,miner,initial_power,repetitions,rounds,final_mean,final_stderr,rounds_to_threshold,"
          "pool_average,miner_average,pool_tail,miner_tail,exact_miner_payoff");
    REQUIRE(summary.size() == 5);
    for (std::size_t i = 1; i < 5; ++i) {
      CHECK(std::abs(std::stod(split(summary[i])[5]) - 8.0 / 3.0) < 0.02);
    }
    const auto manifest = parse(slurp(out / "manifest.json"));
    CHECK(manifest["seed"] == 3);
    CHECK(manifest["tool_version"] == "0.1.0");
    CHECK(manifest["config_digest"].get<std::string>().size() == 64);
    CHECK(manifest["outputs"].size() == 4);
    fs::remove_all(dir);
  }

  TEST_CASE("simulate evolutionary sweep reaches cooperation") {
    const auto dir = scratch_dir("simulate_nm");
    const auto cfg = write_config(dir, "fig2.json", R"({
      "rounds": 500, "repetitions": 100, "seed": 4, "initial_powers": [1, 2, 3, 4],
      "power_model": "expected", "trajectory_repetitions": 0,
      "pool": {"type": "mechanism", "L": 2, "H": 3, "zeta": 3},
      "miner": {"type": "nonmemorial", "q0": [0.01, 0.1, 0.5, 0.8], "epsilon": 5}
    })");
    const auto out = dir / "out";
    REQUIRE(invoke({"simulate", cfg.string(), "--out", out.string()}).code == 0);
    const auto summary = lines(slurp(out / "summary.csv"));
    REQUIRE(summary.size() == 17);
    for (std::size_t i = 1; i < summary.size(); ++i) {
      CHECK(std::stod(split(summary[i])[5]) >= 0.99);
    }
    fs::remove_all(dir);
  }

  TEST_CASE("simulate config errors") {
    const auto dir = scratch_dir("simulate_err");
    auto r = invoke({"simulate", write_config(dir, "empty.json", "").string(), "--out", (dir / "o").string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("rounds, seed, pool, miner") != std::string::npos);
    r = invoke({"simulate", write_config(dir, "partial.json", R"({"rounds": 5})").string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("seed, pool, miner") != std::string::npos);
    r = invoke({"simulate", write_config(dir, "typo.json", R"({"rounds": 5, "seed": 1, "pool": {"type": "fixed", "strategy": [1,1,1,1]}, "miner": {"type": "classical", "kind": "ALLC"}, "repetitons": 3})").string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("repetitons") != std::string::npos);
    r = invoke({"simulate", (dir / "missing.json").string()});
    CHECK(r.code == cli::kExitUsage);
    r = invoke({"simulate", write_config(dir, "bad.json", "{ not json").string()});
    CHECK(r.code == cli::kExitUsage);
    fs::remove_all(dir);
  }

  TEST_CASE("output directory falls back to the environment") {
    const auto dir = scratch_dir("env");
    ::setenv("ZDPOOL_OUT_DIR", dir.string().c_str(), 1);
    const auto r = invoke({"replicate", "1", "--repetitions", "2", "--rounds", "5"});
    ::unsetenv("ZDPOOL_OUT_DIR");
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "fig1_series.csv"));
    fs::remove_all(dir);
  }

  TEST_CASE("replicate golden rows") {
    const auto dir = scratch_dir("golden");
    REQUIRE(invoke({"replicate", "1", "--repetitions", "2", "--rounds", "5", "--seed", "1", "--out", dir.string()}).code == 0);
    const auto series = lines(slurp(dir / "fig1_series.csv"));
    CHECK(series[0] == "case,miner,initial_power,round,mean,stderr");
    CHECK(series[1] == "ALLC,0,,1,3,0");
    REQUIRE(invoke({"replicate", "2", "--repetitions", "2", "--rounds", "5", "--seed", "1", "--out", dir.string()}).code == 0);
    const auto nm = lines(slurp(dir / "fig2_series.csv"));
    CHECK(nm[0] == "case,miner,initial_power,round,mean,stderr");
    CHECK(nm[2] == "q0=0.01;epsilon=5,0,1,2,0.9933067909413191,0");
    fs::remove_all(dir);
  }

  TEST_CASE("replicate is byte-reproducible and rejects unknown figures") {
    const auto a = scratch_dir("rep_a"), b = scratch_dir("rep_b");
    for (const char* fig : {"1", "4"}) {
      REQUIRE(invoke({"replicate", fig, "--repetitions", "10", "--out", a.string()}).code == 0);
      REQUIRE(invoke({"replicate", fig, "--repetitions", "10", "--out", b.string()}).code == 0);
    }
    for (const char* f : {"fig1_series.csv", "fig1_summary.csv", "fig4_series.csv", "fig4_summary.csv"})
      CHECK(slurp(a / f) == slurp(b / f));
    CHECK(invoke({"replicate", "5"}).code == cli::kExitUsage);
    cli::ReplicateOptions bad;
    bad.figure = 7;
    CHECK_THROWS_AS(cli::replicate_config(bad), cli::UsageError);
    fs::remove_all(a);
    fs::remove_all(b);
  }
}
