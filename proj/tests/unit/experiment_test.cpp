#include <doctest.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "pushlearn/experiment.hpp"
#include "support.hpp"

using namespace pushlearn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = PUSHLEARN_SOURCE_DIR;

std::string config_message(const json& tree) {
  try {
    parse_config(tree);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    const std::string msg = e.what();
    const std::string tag = "ConfigError: ";
    return msg.rfind(tag, 0) == 0 ? msg.substr(tag.size()) : msg;
  }
  FAIL("expected a ConfigError");
  return {};
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

json base_tree() { return to_json(preset("star-hi")); }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pushlearn_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(PUSHLEARN_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("presets round-trip through json") {
  for (const std::string& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    const ExperimentConfig back = parse_config(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.params == c.params);
  }
  CHECK(preset_names().size() == 6);
  CHECK(testing::code_of([] { preset("ring-hi"); }) == ErrorCode::ConfigError);
}

TEST_CASE("shipped config files equal the built-in presets") {
  for (const std::string& name : preset_names()) {
    CAPTURE(name);
    const fs::path file = kSource / "configs" / (name + ".json");
    REQUIRE(fs::exists(file));
    CHECK(to_json(load_config(file)) == to_json(preset(name)));
  }
}

TEST_CASE("preset network parameters") {
  const ExperimentConfig hi = preset("path-hi");
  CHECK(hi.params == NetworkParams{3, 5, 5, 0.9, 0.2});
  CHECK(hi.topology.kind == Topology::Path);
  CHECK(hi.topology.n == 4);
  const ExperimentConfig lo = preset("cycle-lo");
  CHECK(lo.params == NetworkParams{3, 5, 5, 0.5, 0.1});
  CHECK(lo.horizon == 5000);
}

TEST_CASE("config errors name the offending key") {
  json t = base_tree();
  t["params"]["p_w"] = 0.0;
  CHECK(starts_with(config_message(t), "params.p_w"));

  t = base_tree();
  t["params"]["L_del"] = 0;
  CHECK(starts_with(config_message(t), "params.L_del"));

  t = base_tree();
  t["bogus"] = 1;
  CHECK(config_message(t).find("bogus") != std::string::npos);

  t = base_tree();
  t.erase("model");
  CHECK(starts_with(config_message(t), "model"));

  t = base_tree();
  t["model"]["agents"] = json::array();
  CHECK(starts_with(config_message(t), "model.agents"));

  t = base_tree();
  t["model"]["agents"].erase(3);
  CHECK(starts_with(config_message(t), "model.agents"));

  t = base_tree();
  t["model"]["agents"][0]["hypotheses"][0]["family"] = "cauchy";
  CHECK(starts_with(config_message(t), "model.agents[0].hypotheses[0]"));

  t = base_tree();
  t["model"]["agents"][1]["truth"]["variance"] = -1.0;
  CHECK(starts_with(config_message(t), "model.agents[1].truth"));

  t = base_tree();
  t["topology"]["kind"] = "ring";
  CHECK(starts_with(config_message(t), "topology.kind"));

  t = base_tree();
  t["horizon"] = 0;
  CHECK(starts_with(config_message(t), "horizon"));

  t = base_tree();
  t["mode"] = "fast";
  CHECK(starts_with(config_message(t), "mode"));

  t = base_tree();
  t["mode"] = "raps";
  t["raps"]["initial_x"] = {1.0, 2.0};
  CHECK(starts_with(config_message(t), "raps.initial_x"));

  t = base_tree();
  t["analysis"]["window_fraction"] = 1.5;
  CHECK(starts_with(config_message(t), "analysis.window_fraction"));

  CHECK(testing::code_of([] { load_config("/nonexistent/x.json"); }) == ErrorCode::ConfigError);
}

TEST_CASE("graph file paths resolve against the config directory") {
  const fs::path dir = scratch("graphfile");
  {
    std::ofstream g(dir / "tri.graph");
    write_graph(g, standard_topology(Topology::Cycle, 3));
  }
  json t = base_tree();
  t["topology"] = {{"file", "tri.graph"}};
  t["model"]["agents"].erase(3);
  t["raps"]["initial_x"] = {1.0, 2.0, 3.0};
  {
    std::ofstream f(dir / "tri.json");
    f << t.dump(2);
  }
  const ExperimentConfig c = load_config(dir / "tri.json");
  CHECK(build_graph(c).size() == 3);
  CHECK(build_graph(c).edge_count() == 3);
}

TEST_CASE("calibrated model") {
  const HypothesisModel model(calibrated_agents(kCalibratedShift));
  const Objective obj = objective(model);
  REQUIRE(obj.optimal.size() == 1);
  CHECK(obj.optimal.front() == 2);
  CHECK(obj.optimum == doctest::Approx(0.29).epsilon(0.01 / 0.29));
  CHECK(obj.gap > 0.5);

  const Calibration cal = calibrate_shift(0.29);
  CHECK(cal.shift == doctest::Approx(kCalibratedShift).epsilon(1e-3));
  CHECK(std::abs(cal.optimum - 0.29) < 1e-3);

}

TEST_CASE("flooring never activates on the shipped model") {
  // Grid over each truth's central 1 - 1e-6 mass.
  const double half_width = 4.891638475698;  // standard normal 1 - 2.5e-7 quantile
  CHECK(2 * testing::std_cdf(-half_width) == doctest::Approx(5e-7).epsilon(1e-6));
  const ExperimentConfig c = preset("star-hi");
  const HypothesisModel model = build_model(c);
  double worst = INFINITY;
  for (int i = 0; i < model.agent_count(); ++i) {
    const double mean = model.truth(i).as_truncated_normal().mean;
    for (int g = 0; g < 10000; ++g) {
      const double x = mean - half_width + 2 * half_width * g / 9999.0;
      for (const Distribution& h : model.agent(i).likelihoods) {
        worst = std::min(worst, h.density(x));
      }
    }
  }
  CHECK(worst > c.floor);
}

TEST_CASE("format_double is shortest round-trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 5e-324, -2.5, 0.0, 1e22, 0.9999999999999999}) {
    const std::string s = format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("belief csv layout") {
  ExperimentConfig c = preset("cycle-hi");
  c.horizon = 20;
  const Outcome out = run_experiment(c);
  std::istringstream in(out.csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "tick,agent,wake,y,belief_0,belief_1,belief_2");
  int rows = 0;
  double sum_y = 0.0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 7);
    CHECK(std::stoi(cells[0]) == (rows - 1) / 4);
    CHECK(std::stoi(cells[1]) == (rows - 1) % 4);
    const double b = std::stod(cells[4]) + std::stod(cells[5]) + std::stod(cells[6]);
    CHECK(b == doctest::Approx(1.0).epsilon(1e-12));
    if ((rows - 1) / 4 == 0) sum_y += std::stod(cells[3]);
  }
  CHECK(rows == 21 * 4);
  CHECK(sum_y == doctest::Approx(4.0));
}

TEST_CASE("concentration tick") {
  ExperimentConfig shortc = preset("star-lo");
  shortc.horizon = 5;
  CHECK(run_experiment(shortc).concentration_tick == -1);
  ExperimentConfig c = preset("star-hi");
  c.horizon = 3000;
  const Outcome out = run_experiment(c);
  CHECK(out.concentration_tick > 0);
  CHECK(out.concentration_tick < 3000);
  CHECK(out.report["concentration"]["theta"] == 2);
  CHECK(out.report["concentration"]["final_min_belief"].get<double>() > 0.95);
}

TEST_CASE("learning run report") {
  ExperimentConfig c = preset("path-hi");
  c.horizon = 800;
  const Outcome out = run_experiment(c, true);
  CHECK(out.passed);
  const json& r = out.report;
  CHECK(r["pass"] == true);
  for (const char* key : {"mass", "normalization", "audit"}) {
    CAPTURE(key);
    CHECK(r["checks"][key]["pass"] == true);
  }
  CHECK(r["objective"]["optimal"] == json::array({2}));
  CHECK(r["constants"]["L_s"] == 37);
  CHECK(r["audit"].size() == 2);
  CHECK(r["rate"]["entries"].size() == 8);
  CHECK(out.run["config"] == to_json(c));
  CHECK(out.run["stale_dropped"] == 0);
}

TEST_CASE("raps run report") {
  ExperimentConfig c = preset("star-lo");
  c.mode = RunMode::Raps;
  c.horizon = 2000;
  const Outcome out = run_experiment(c);
  CHECK(out.passed);
  CHECK(starts_with(out.csv, "tick,agent,wake,y,x,z\n"));
  CHECK(out.report["decay"]["mean"].get<double>() == doctest::Approx(2.5));
  CHECK(out.report["decay"]["final_error"].get<double>() < 1e-8);
  CHECK(out.report["decay"]["bound_holds"] == true);
}

TEST_CASE("runs are deterministic and seed-sensitive") {
  ExperimentConfig c = preset("cycle-lo");
  c.horizon = 300;
  const Outcome a = run_experiment(c);
  const Outcome b = run_experiment(c);
  CHECK(a.csv == b.csv);
  CHECK(a.run.dump() == b.run.dump());
  CHECK(a.report.dump() == b.report.dump());
  c.seed = 1;
  CHECK(run_experiment(c).csv != a.csv);
}

TEST_CASE("write_outcome files") {
  const fs::path dir = scratch("write");
  ExperimentConfig c = preset("star-hi");
  c.horizon = 50;
  const Outcome out = run_experiment(c);
  write_outcome(out, c, dir);
  CHECK(slurp(dir / "beliefs.csv") == out.csv);
  CHECK(json::parse(slurp(dir / "run.json")) == out.run);
  CHECK(json::parse(slurp(dir / "report.json")) == out.report);
  CHECK(slurp(dir / "report.json").back() == '\n');
}

TEST_CASE("sweep") {
  CHECK(testing::code_of([] { sweep({}, {0}); }) == ErrorCode::EmptySweep);
  CHECK(testing::code_of([] { sweep({preset("star-hi")}, {}); }) == ErrorCode::EmptySweep);

  ExperimentConfig c = preset("cycle-hi");
  c.horizon = 1500;
  const SweepReport one = sweep({c}, {3}, 1);
  REQUIRE(one.cells.size() == 1);
  c.seed = 3;
  const Outcome direct = run_experiment(c);
  CHECK(one.cells[0].concentration_tick == direct.concentration_tick);
  CHECK(one.cells[0].final_min_belief ==
        direct.report["concentration"]["final_min_belief"].get<double>());
  CHECK(one.cells[0].preset == "cycle-hi");

  // Thread count does not change results.
  std::vector<ExperimentConfig> configs{preset("star-hi"), preset("path-lo")};
  for (auto& cfg : configs) cfg.horizon = 1000;
  const SweepReport serial = sweep(configs, {0, 1, 2}, 1);
  const SweepReport parallel = sweep(configs, {0, 1, 2}, 4);
  CHECK(serial.to_json() == parallel.to_json());
  CHECK(serial.cells[4].preset == "path-lo");
  CHECK(serial.cells[4].seed == 1);
}

TEST_CASE("lower wake and link rates lengthen the transient") {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  const SweepReport hi = sweep({preset("path-hi")}, seeds);
  const SweepReport lo = sweep({preset("path-lo")}, seeds);
  CHECK(hi.concentrated == 5);
  CHECK(lo.concentrated == 5);
  auto total = [](const SweepReport& r) {
    return std::accumulate(r.cells.begin(), r.cells.end(), 0,
                           [](int s, const SweepCell& c) { return s + c.concentration_tick; });
  };
  CHECK(total(lo) > total(hi));
}

TEST_CASE("cli exit codes") {
  const fs::path dir = scratch("cli");
  CHECK(cli("run --preset star-hi --horizon 200 --quiet --out-dir " + dir.string()) == 0);
  CHECK(fs::exists(dir / "beliefs.csv"));
  CHECK(fs::exists(dir / "report.json"));

  json bad = base_tree();
  bad["params"]["p_l"] = 2.0;
  std::ofstream(dir / "bad.json") << bad.dump();
  CHECK(cli("run --config " + (dir / "bad.json").string()) == 2);
  CHECK(cli("run --preset nope") == 2);
  CHECK(cli("run") == 2);
  CHECK(cli("frobnicate") == 2);

  CHECK(cli("run --preset star-lo --mode raps --horizon 300 --quiet --out-dir " +
            (dir / "raps").string()) == 0);
  CHECK(fs::exists(dir / "raps" / "raps.csv"));

  // A horizon too short to concentrate still passes: only invariants are checked.
  CHECK(cli("sweep --presets star-hi --seeds 0,1 --horizon 100 --quiet --out-dir " +
            dir.string()) == 0);
  const json s = json::parse(slurp(dir / "sweep.json"));
  CHECK(s["runs"] == 2);
}
