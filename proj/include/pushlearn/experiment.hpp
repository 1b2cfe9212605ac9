#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pushlearn/analysis.hpp"
#include "pushlearn/engine.hpp"
#include "pushlearn/graph.hpp"
#include "pushlearn/schedule.hpp"
#include "pushlearn/stats.hpp"

namespace pushlearn {

enum class RunMode { Learning, Raps, Audit };

std::optional<RunMode> parse_mode(std::string_view name);
std::string_view to_string(RunMode mode);

struct TopologySpec {
  Topology kind = Topology::Star;
  int n = 4;
  /// Graph file; when set, `kind` and `n` are ignored.
  std::optional<std::filesystem::path> file;
};

/// Everything a run needs. Config files are JSON with this key tree:
///
///   topology  {kind, n} | {file}
///   model     {floor, agents: [{truth, hypotheses: [...]}]}
///             where a distribution is
///             {family: "truncated_normal", mean, variance, lower, upper} or
///             {family: "categorical", support: [...], probs: [...]}
///   params    {L_del, L_u, L_f, p_w, p_l}
///   horizon, seed, mode ("learning" | "raps" | "audit")
///   raps      {initial_x: [...]}
///   analysis  {window_fraction}
///   output    {dir}
struct ExperimentConfig {
  std::string name;
  TopologySpec topology;
  std::vector<HypothesisModel::Agent> agents;
  double floor = 1e-8;
  NetworkParams params{3, 5, 5, 0.9, 0.2};
  int horizon = 5000;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::Learning;
  std::vector<double> raps_initial{1.0, 2.0, 3.0, 4.0};
  double window_fraction = 0.5;
  std::filesystem::path out_dir = "out";
};

/// Parses and validates a config tree; every failure is Error{ConfigError}
/// whose message starts with the dotted path of the offending key.
/// Relative graph-file paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& tree,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

nlohmann::json to_json(const Distribution& d);
Distribution distribution_from_json(const nlohmann::json& node, const std::string& where);

/// Four agents with truth TN(i, 1), i = 1..4, and three unit-variance
/// truncated-normal hypotheses per agent. The third hypothesis is shifted
/// `shift` away from each truth, the other two are fixed decoys.
std::vector<HypothesisModel::Agent> calibrated_agents(double shift);

struct Calibration {
  double shift = 0.0;
  double optimum = 0.0;  // F at the third hypothesis
  double gap = 0.0;
};

/// Grid search for the shift whose F(theta_3) is closest to `target` while
/// theta_3 stays the unique minimiser.
Calibration calibrate_shift(double target = 0.29);

/// Shift stored in the shipped presets, found by calibrate_shift(0.29).
inline constexpr double kCalibratedShift = 0.3808;

std::vector<std::string> preset_names();
/// Throws Error{ConfigError} for unknown names.
ExperimentConfig preset(std::string_view name);

DirectedGraph build_graph(const ExperimentConfig& config);
HypothesisModel build_model(const ExperimentConfig& config);

/// Shortest round-trip decimal.
std::string format_double(double v);

std::string belief_csv(const BeliefTrace& trace);
std::string raps_csv(const RapsTrace& trace);

/// First tick after which every agent's belief on `theta` stays above
/// `threshold` through the horizon; -1 if it never does.
int concentration_tick(const BeliefTrace& trace, int theta, double threshold = 0.95);

struct Outcome {
  std::string csv;
  nlohmann::json run;     // config echo and run metadata
  nlohmann::json report;  // analysis report
  bool passed = false;
  int concentration_tick = -1;
};

/// Runs one configured experiment in memory. `audit` also enables the
/// recursion audit for learning runs.
Outcome run_experiment(const ExperimentConfig& config, bool audit = false);

/// Writes beliefs.csv (raps.csv in raps mode), run.json and report.json.
void write_outcome(const Outcome& outcome, const ExperimentConfig& config,
                   const std::filesystem::path& dir);

struct SweepCell {
  std::string preset;
  std::uint64_t seed = 0;
  int concentration_tick = -1;
  double final_min_belief = 0.0;  // min over agents of the optimal-hypothesis belief at K
  bool passed = false;
};

struct SweepReport {
  std::vector<SweepCell> cells;  // preset-major, then seeds in the given order
  int concentrated = 0;
  nlohmann::json to_json() const;
};

/// Runs every (config, seed) cell on `threads` workers. Throws
/// Error{EmptySweep} when either list is empty.
SweepReport sweep(const std::vector<ExperimentConfig>& configs,
                  const std::vector<std::uint64_t>& seeds, unsigned threads = 0);

}  // namespace pushlearn
