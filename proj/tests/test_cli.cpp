#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "roaforge/run.hpp"

using namespace roaforge;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("roaforge_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& cfg) {
  const fs::path path = dir / "config.json";
  std::ofstream(path) << cfg.dump(2);
  return path;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

int run_cli(const std::string& args) {
  const char* bin = std::getenv("ROAFORGE_BIN");
  REQUIRE(bin != nullptr);
  const std::string cmd = std::string(bin) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json small_config(const fs::path& out) {
  return {{"benchmark", "pendulum_a"}, {"grid_points", 31},   {"num_particles", 4}, {"max_iter", 40},
          {"stall_window", 10},        {"run_count", 1},      {"output_dir", out.string()}};
}

json without_timestamp(const fs::path& path) {
  json j = json::parse(read_file(path));
  j.erase("timestamp");
  return j;
}

}  // namespace

TEST_CASE("defaults are applied and recorded") {
  const RunConfig cfg = parse_config(json{{"benchmark", "pendulum_a"}});
  CHECK(cfg.tau == 0.01);
  CHECK(cfg.grid_points == 250);
  CHECK(cfg.max_iter == 15000);
  CHECK(cfg.stall_window == 100);
  CHECK(cfg.run_count == 5);
  CHECK(cfg.candidate == CandidateKind::Quadratic);
  const auto& d = cfg.defaults_applied;
  CHECK(std::find(d.begin(), d.end(), "tau = 0.01") != d.end());
  CHECK(std::find(d.begin(), d.end(), "max_iter = 15000") != d.end());
}

TEST_CASE("config errors name the field") {
  auto message = [](const json& doc) {
    try {
      parse_config(doc);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message({{"benchmark", "pendulum_a"}, {"tau", -1}}).find("'tau'") != std::string::npos);
  CHECK(message({{"benchmark", "pendulum_a"}, {"taau", 0.01}}).find("'taau': unknown key") != std::string::npos);
  CHECK(message({{"benchmark", "pendulum_a"}, {"grid_points", 10.5}}).find("'grid_points'") != std::string::npos);
  CHECK(message({{"benchmark", "pendulum_a"}, {"neural", {{"epochs", -1}}}}).find("'neural.epochs'") !=
        std::string::npos);
  CHECK(message({{"benchmark", "pendulum_a"}, {"plant", {{"masss", 1}}}}).find("'plant.masss'") != std::string::npos);
  CHECK(message({{"benchmark", "pendulum_a"}, {"gain", {1, 2, 3}}}).find("'gain'") != std::string::npos);
  CHECK(message({{"benchmark", "rocket"}}).find("'benchmark'") != std::string::npos);
  CHECK(message(json::object()).find("'benchmark'") != std::string::npos);
  CHECK(message({{"benchmark", "vehicle_steering"}, {"neural", {{"hidden", {1, 4}}}}}).find("'neural.hidden'") !=
        std::string::npos);
}

TEST_CASE("config echo round-trips") {
  const json doc = {{"benchmark", "aircraft_pitch"},
                    {"tau", 0.02},
                    {"seed", 99},
                    {"candidate", "neural"},
                    {"plant", {{"u_max", 0.3}, {"roa_lower", {-0.1, -0.1, -0.1}}, {"roa_upper", {0.1, 0.1, 0.1}}}},
                    {"neural", {{"hidden", {4, 8}}, {"epochs", 3}}}};
  const RunConfig cfg = parse_config(doc);
  const auto echo = cfg.to_json();
  const RunConfig again = parse_config(json::parse(echo.dump()));
  CHECK(again.to_json() == echo);
  CHECK(again.defaults_applied.empty());
}

TEST_CASE("exit code 2 for bad configs") {
  const fs::path dir = scratch_dir("bad");
  CHECK(run_cli("synth --config " + write_config(dir, {{"benchmark", "pendulum_a"}, {"taau", 1}}).string()) == 2);
  CHECK(run_cli("synth --config " + (dir / "missing.json").string()) == 2);
  std::ofstream(dir / "broken.json") << "{\"benchmark\": ";
  CHECK(run_cli("synth --config " + (dir / "broken.json").string()) == 2);
  CHECK(run_cli("fly --config " + (dir / "config.json").string()) == 2);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("exit code 3 when no gain in range stabilizes") {
  const fs::path dir = scratch_dir("unstable");
  json cfg = small_config(dir / "out");
  cfg["plant"] = {{"gain_lower", {-10, -5}}, {"gain_upper", {-9, -4}}};
  CHECK(run_cli("synth --config " + write_config(dir, cfg).string()) == 3);
  CHECK_FALSE(fs::exists(dir / "out" / "result.json"));
}

TEST_CASE("exit code 4 for a destabilizing gain") {
  const fs::path dir = scratch_dir("numeric");
  json cfg = small_config(dir / "out");
  cfg["gain"] = {-1.0, 0.0};
  CHECK(run_cli("roa --config " + write_config(dir, cfg).string()) == 4);
}

TEST_CASE("synth writes reproducible artifacts") {
  const fs::path dir = scratch_dir("synth");
  json cfg = small_config(dir / "a");
  cfg["w2"] = 0.0;
  cfg["max_iter"] = 400;
  cfg["num_particles"] = 10;
  cfg["stall_window"] = 50;
  const fs::path path = write_config(dir, cfg);
  REQUIRE(run_cli("synth --config " + path.string() + " --seed 3") == 0);
  REQUIRE(run_cli("synth --config " + path.string() + " --seed 3 --out " + (dir / "b").string()) == 0);

  json a = without_timestamp(dir / "a" / "result.json");
  json b = without_timestamp(dir / "b" / "result.json");
  CHECK(a["config"]["seed"] == 3);
  a["config"].erase("output_dir");
  b["config"].erase("output_dir");
  CHECK(a == b);

  const json r = json::parse(read_file(dir / "a" / "result.json"));
  CHECK(r.contains("timestamp"));
  const double cost = r["result"]["synthesis"]["cost"];
  const double lqr = r["result"]["k_lqr"]["cost"];
  CHECK(cost <= 1.01 * lqr);
  CHECK(first_line(dir / "a" / "history.csv") == "iteration,gbest_fitness,cost_term,roa_term");
  const std::string log = read_file(dir / "a" / "run.log");
  CHECK(log.find("default: tau = 0.01") != std::string::npos);
  CHECK(log.find("default: seed") == std::string::npos);

  // The echoed config parses back to itself.
  CHECK(json::parse(parse_config(r["config"]).to_json().dump()) == r["config"]);
}

TEST_CASE("table subcommands write their CSV headers") {
  const fs::path dir = scratch_dir("tables");
  json cfg = small_config(dir / "compare");
  cfg["particle_counts"] = {3};
  REQUIRE(run_cli("compare --config " + write_config(dir, cfg).string()) == 0);
  CHECK(first_line(dir / "compare" / "compare.csv") == "particles,controller,pct_cost_increase,pct_roa_increase");

  cfg["output_dir"] = (dir / "mass").string();
  cfg["masses"] = {0.1, 0.4};
  REQUIRE(run_cli("mass-sweep --config " + write_config(dir, cfg).string()) == 0);
  CHECK(first_line(dir / "mass" / "mass_sweep.csv") == "mass_kg,roa_cells");

  cfg["output_dir"] = (dir / "grid").string();
  cfg["grid_sweep_points"] = {21, 41};
  REQUIRE(run_cli("grid-sweep --config " + write_config(dir, cfg).string()) == 0);
  CHECK(first_line(dir / "grid" / "grid_sweep.csv") == "points_per_dim,roa_cells,seconds");
  const json g = json::parse(read_file(dir / "grid" / "result.json"));
  CHECK(g["result"]["rows"].size() == 2);
}

TEST_CASE("simulate writes one trajectory file per angle") {
  const fs::path dir = scratch_dir("simulate");
  json cfg = small_config(dir / "out");
  cfg["sim_duration"] = 1.0;
  REQUIRE(run_cli("simulate --config " + write_config(dir, cfg).string()) == 0);
  for (const char* name : {"simulate_0.csv", "simulate_1.csv"}) {
    const fs::path csv = dir / "out" / name;
    REQUIRE(fs::exists(csv));
    CHECK(first_line(csv) == "time_s,x0,x1,u0,controller");
    std::ifstream in(csv);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 1 + 3 * 101);
  }
}

TEST_CASE("roa writes the certified cells") {
  const fs::path dir = scratch_dir("roa");
  json cfg = small_config(dir / "out");
  cfg["grid_points"] = 51;
  REQUIRE(run_cli("roa --config " + write_config(dir, cfg).string()) == 0);
  const json r = json::parse(read_file(dir / "out" / "result.json"));
  CHECK(r["result"]["roa_cells"].get<int>() > 0);
  CHECK(first_line(dir / "out" / "roa_cells.csv") == "cell,x0,x1");

  cfg["step_map"] = "nonlinear";
  cfg["output_dir"] = (dir / "nl").string();
  REQUIRE(run_cli("roa --config " + write_config(dir, cfg).string()) == 0);
  const json nl = json::parse(read_file(dir / "nl" / "result.json"));
  CHECK(nl["result"].contains("step_lipschitz_estimate"));

  cfg["step_map"] = "linear";
  cfg["candidate"] = "neural";
  cfg["neural"] = {{"epochs", 2}, {"hidden", {4, 4}}};
  cfg["output_dir"] = (dir / "nn").string();
  REQUIRE(run_cli("roa --config " + write_config(dir, cfg).string()) == 0);
  const LyapunovNet net = LyapunovNet::load(dir / "nn" / "net.bin");
  CHECK(net.layer_dims() == std::vector<int>{2, 4, 4});
}
