// pushlearn: run, sweep and calibrate asynchronous push-sum learning experiments.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 config error, 3 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pushlearn/error.hpp"
#include "pushlearn/experiment.hpp"

using namespace pushlearn;

namespace {

enum Exit { kPass = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeError = 3 };

struct Overrides {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  std::string mode;
  std::string out_dir;
  bool audit = false;
  bool quiet = false;
};

ExperimentConfig resolve(const Overrides& o) {
  if (o.config.empty() == o.preset.empty()) {
    throw Error(ErrorCode::ConfigError, "exactly one of --config and --preset is required");
  }
  ExperimentConfig c = o.config.empty() ? preset(o.preset) : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.horizon) {
    if (*o.horizon < 1) throw Error(ErrorCode::ConfigError, "horizon: must be >= 1");
    c.horizon = *o.horizon;
  }
  if (!o.mode.empty()) {
    const auto m = parse_mode(o.mode);
    if (!m) throw Error(ErrorCode::ConfigError, "mode: expected learning, raps or audit");
    c.mode = *m;
  }
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  return c;
}

int run_command(const Overrides& o) {
  const ExperimentConfig config = resolve(o);
  const Outcome out = run_experiment(config, o.audit);
  write_outcome(out, config, config.out_dir);
  if (!o.quiet) {
    std::printf("%s: %s (mass residual %.3g, stale drops %lld) -> %s\n",
                config.name.empty() ? "run" : config.name.c_str(), out.passed ? "pass" : "FAIL",
                out.run["max_mass_residual"].get<double>(),
                static_cast<long long>(out.run["stale_dropped"].get<long>()),
                config.out_dir.string().c_str());
    if (out.report.contains("concentration")) {
      const auto& c = out.report["concentration"];
      std::printf("  theta_%d: min final belief %.6f, concentrated from tick %d\n",
                  c["theta"].get<int>() + 1, c["final_min_belief"].get<double>(),
                  c["tick"].get<int>());
    }
  }
  return out.passed ? kPass : kCheckFailed;
}

int sweep_command(const Overrides& o, const std::vector<std::string>& presets,
                  const std::vector<std::uint64_t>& seeds, unsigned threads) {
  std::vector<ExperimentConfig> configs;
  for (const std::string& name : presets) {
    ExperimentConfig c = preset(name);
    if (o.horizon) c.horizon = *o.horizon;
    configs.push_back(std::move(c));
  }
  const SweepReport report = sweep(configs, seeds, threads);
  const std::string body = report.to_json().dump(2) + "\n";
  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    std::ofstream(std::filesystem::path(o.out_dir) / "sweep.json", std::ios::binary) << body;
  }
  if (!o.quiet) {
    for (const SweepCell& c : report.cells) {
      std::printf("%-9s seed %-3llu concentrated from tick %6d, min final belief %.6f\n",
                  c.preset.c_str(), static_cast<unsigned long long>(c.seed),
                  c.concentration_tick, c.final_min_belief);
    }
    std::printf("%d/%zu runs concentrated\n", report.concentrated, report.cells.size());
  }
  bool ok = true;
  for (const SweepCell& c : report.cells) ok = ok && c.passed;
  return ok ? kPass : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous push-sum distributed learning simulator"};
  app.require_subcommand(1);

  Overrides o;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--horizon", o.horizon, "Number of ticks K");
    cmd->add_option("--out-dir", o.out_dir, "Output directory");
    cmd->add_flag("--quiet", o.quiet, "Suppress the summary");
  };

  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", o.config, "Experiment config (JSON)");
  run->add_option("--preset", o.preset, "Built-in preset")
      ->check(CLI::IsMember(preset_names()));
  run->add_option("--seed", o.seed, "Master seed");
  run->add_option("--mode", o.mode, "learning | raps | audit");
  run->add_flag("--audit", o.audit, "Keep full history and audit the recursions");
  add_common(run);

  std::vector<std::string> presets = preset_names();
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  unsigned threads = 0;
  CLI::App* sw = app.add_subcommand("sweep", "Run presets across seeds");
  sw->add_option("--presets", presets, "Presets to sweep")->delimiter(',');
  sw->add_option("--seeds", seeds, "Seeds")->delimiter(',');
  sw->add_option("--threads", threads, "Worker threads (0 = hardware)");
  add_common(sw);

  double target = 0.29;
  CLI::App* cal = app.add_subcommand("calibrate", "Search the hypothesis shift for a target F");
  cal->add_option("--target", target, "Target F at the optimum");

  std::string show_preset;
  CLI::App* show = app.add_subcommand("config", "Print a preset as a config file");
  show->add_option("preset", show_preset, "Preset name")
      ->required()
      ->check(CLI::IsMember(preset_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  try {
    if (*run) return run_command(o);
    if (*sw) return sweep_command(o, presets, seeds, threads);
    if (*cal) {
      const Calibration c = calibrate_shift(target);
      std::printf("shift %.4f  F(theta*) %.6f  gap %.6f\n", c.shift, c.optimum, c.gap);
      return kPass;
    }
    if (*show) {
      std::cout << to_json(preset(show_preset)).dump(2) << "\n";
      return kPass;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ErrorCode::ConfigError ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
  return kPass;
}
