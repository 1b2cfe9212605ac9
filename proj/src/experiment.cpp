#include "pushlearn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "pushlearn/error.hpp"

namespace pushlearn {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& why) {
  throw Error(ErrorCode::ConfigError, where + ": " + why);
}

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

std::string index(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

const json* child(const json& node, const char* key) {
  auto it = node.find(key);
  return it == node.end() ? nullptr : &*it;
}

void require_object(const json& node, const std::string& where) {
  if (!node.is_object()) config_error(where, "expected an object");
}

double number(const json& node, const std::string& where) {
  if (!node.is_number()) config_error(where, "expected a number");
  return node.get<double>();
}

int integer(const json& node, const std::string& where) {
  if (!node.is_number_integer()) config_error(where, "expected an integer");
  return node.get<int>();
}

std::string text(const json& node, const std::string& where) {
  if (!node.is_string()) config_error(where, "expected a string");
  return node.get<std::string>();
}

std::vector<double> numbers(const json& node, const std::string& where) {
  if (!node.is_array()) config_error(where, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(number(node[i], index(where, i)));
  return out;
}

void reject_unknown(const json& node, const std::string& where,
                    std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : node.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      config_error(join(where, key), "unknown key");
    }
  }
}

// Runs an owning module's validation and re-labels its error with the key path.
template <typename F>
auto validated(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(where, e.what());
  }
}

TopologySpec parse_topology_block(const json& node, const std::filesystem::path& base_dir) {
  const std::string where = "topology";
  require_object(node, where);
  reject_unknown(node, where, {"kind", "n", "file"});
  TopologySpec spec;
  if (const json* file = child(node, "file")) {
    std::filesystem::path p = text(*file, join(where, "file"));
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    spec.file = p;
    return spec;
  }
  const json* kind = child(node, "kind");
  if (kind == nullptr) config_error(where, "needs either 'kind' or 'file'");
  const auto parsed = parse_topology(text(*kind, join(where, "kind")));
  if (!parsed) config_error(join(where, "kind"), "expected one of path, star, cycle");
  spec.kind = *parsed;
  if (const json* n = child(node, "n")) spec.n = integer(*n, join(where, "n"));
  if (spec.n < 2) config_error(join(where, "n"), "must be >= 2");
  return spec;
}

NetworkParams parse_params_block(const json& node) {
  const std::string where = "params";
  require_object(node, where);
  reject_unknown(node, where, {"L_del", "L_u", "L_f", "p_w", "p_l"});
  NetworkParams p;
  auto need = [&](const char* key) -> const json& {
    const json* v = child(node, key);
    if (v == nullptr) config_error(join(where, key), "missing");
    return *v;
  };
  p.max_delay = integer(need("L_del"), "params.L_del");
  p.max_sleep = integer(need("L_u"), "params.L_u");
  p.max_failures = integer(need("L_f"), "params.L_f");
  p.wake_prob = number(need("p_w"), "params.p_w");
  p.loss_prob = number(need("p_l"), "params.p_l");
  try {
    p.validate();
  } catch (const Error& e) {
    // validate() names the field first: "<field>: why".
    const std::string& msg = e.detail();
    const auto colon = msg.find(':');
    config_error(join(where, msg.substr(0, colon)), msg.substr(colon + 2));
  }
  return p;
}

void parse_model_block(const json& node, ExperimentConfig& config) {
  const std::string where = "model";
  require_object(node, where);
  reject_unknown(node, where, {"floor", "agents"});
  if (const json* f = child(node, "floor")) config.floor = number(*f, join(where, "floor"));
  const json* agents = child(node, "agents");
  if (agents == nullptr || !agents->is_array() || agents->empty()) {
    config_error(join(where, "agents"), "expected a non-empty list");
  }
  config.agents.clear();
  for (std::size_t i = 0; i < agents->size(); ++i) {
    const std::string at = index(join(where, "agents"), i);
    const json& a = (*agents)[i];
    require_object(a, at);
    reject_unknown(a, at, {"truth", "hypotheses"});
    const json* truth = child(a, "truth");
    const json* hyps = child(a, "hypotheses");
    if (truth == nullptr) config_error(join(at, "truth"), "missing");
    if (hyps == nullptr || !hyps->is_array() || hyps->empty()) {
      config_error(join(at, "hypotheses"), "expected a non-empty list");
    }
    HypothesisModel::Agent agent{distribution_from_json(*truth, join(at, "truth")), {}};
    for (std::size_t t = 0; t < hyps->size(); ++t) {
      agent.likelihoods.push_back(
          distribution_from_json((*hyps)[t], index(join(at, "hypotheses"), t)));
    }
    config.agents.push_back(std::move(agent));
  }
}

void add_preset_network(ExperimentConfig& c, Topology kind, bool high) {
  c.topology = TopologySpec{kind, 4, std::nullopt};
  c.params = high ? NetworkParams{3, 5, 5, 0.9, 0.2} : NetworkParams{3, 5, 5, 0.5, 0.1};
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

std::optional<RunMode> parse_mode(std::string_view name) {
  if (name == "learning") return RunMode::Learning;
  if (name == "raps") return RunMode::Raps;
  if (name == "audit") return RunMode::Audit;
  return std::nullopt;
}

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Learning: return "learning";
    case RunMode::Raps: return "raps";
    case RunMode::Audit: return "audit";
  }
  return "?";
}

json to_json(const Distribution& d) {
  if (d.is_categorical()) {
    const Categorical& c = d.as_categorical();
    return json{{"family", "categorical"}, {"support", c.support}, {"probs", c.probs}};
  }
  const TruncatedNormal& t = d.as_truncated_normal();
  return json{{"family", "truncated_normal"}, {"mean", t.mean},   {"variance", t.variance},
              {"lower", t.lower},             {"upper", t.upper}};
}

Distribution distribution_from_json(const json& node, const std::string& where) {
  require_object(node, where);
  const json* family = child(node, "family");
  if (family == nullptr) config_error(join(where, "family"), "missing");
  const std::string f = text(*family, join(where, "family"));
  if (f == "categorical") {
    reject_unknown(node, where, {"family", "support", "probs"});
    const json* s = child(node, "support");
    const json* p = child(node, "probs");
    if (s == nullptr) config_error(join(where, "support"), "missing");
    if (p == nullptr) config_error(join(where, "probs"), "missing");
    auto support = numbers(*s, join(where, "support"));
    auto probs = numbers(*p, join(where, "probs"));
    return validated(where, [&] { return Distribution::categorical(support, probs); });
  }
  if (f == "truncated_normal") {
    reject_unknown(node, where, {"family", "mean", "variance", "lower", "upper"});
    TruncatedNormal t;
    const json* mean = child(node, "mean");
    if (mean == nullptr) config_error(join(where, "mean"), "missing");
    t.mean = number(*mean, join(where, "mean"));
    if (const json* v = child(node, "variance")) t.variance = number(*v, join(where, "variance"));
    if (const json* v = child(node, "lower")) t.lower = number(*v, join(where, "lower"));
    if (const json* v = child(node, "upper")) t.upper = number(*v, join(where, "upper"));
    return validated(where, [&] {
      return Distribution::truncated_normal(t.mean, t.variance, t.lower, t.upper);
    });
  }
  config_error(join(where, "family"), "expected truncated_normal or categorical");
}

ExperimentConfig parse_config(const json& tree, const std::filesystem::path& base_dir) {
  require_object(tree, "<root>");
  reject_unknown(tree, "", {"name", "topology", "model", "params", "horizon", "seed", "mode",
                            "raps", "analysis", "output"});
  ExperimentConfig c;
  if (const json* v = child(tree, "name")) c.name = text(*v, "name");

  const json* topo = child(tree, "topology");
  if (topo == nullptr) config_error("topology", "missing");
  c.topology = parse_topology_block(*topo, base_dir);

  const json* model = child(tree, "model");
  if (model == nullptr) config_error("model", "missing");
  parse_model_block(*model, c);

  const json* params = child(tree, "params");
  if (params == nullptr) config_error("params", "missing");
  c.params = parse_params_block(*params);

  if (const json* v = child(tree, "horizon")) c.horizon = integer(*v, "horizon");
  if (c.horizon < 1) config_error("horizon", "must be >= 1");
  if (const json* v = child(tree, "seed")) {
    if (!v->is_number_unsigned()) config_error("seed", "expected a non-negative integer");
    c.seed = v->get<std::uint64_t>();
  }
  if (const json* v = child(tree, "mode")) {
    const auto mode = parse_mode(text(*v, "mode"));
    if (!mode) config_error("mode", "expected learning, raps or audit");
    c.mode = *mode;
  }
  if (const json* v = child(tree, "raps")) {
    require_object(*v, "raps");
    reject_unknown(*v, "raps", {"initial_x"});
    if (const json* x = child(*v, "initial_x")) c.raps_initial = numbers(*x, "raps.initial_x");
  }
  if (const json* v = child(tree, "analysis")) {
    require_object(*v, "analysis");
    reject_unknown(*v, "analysis", {"window_fraction"});
    if (const json* w = child(*v, "window_fraction")) {
      c.window_fraction = number(*w, "analysis.window_fraction");
      if (!(c.window_fraction > 0.0 && c.window_fraction <= 1.0)) {
        config_error("analysis.window_fraction", "must lie in (0, 1]");
      }
    }
  }
  if (const json* v = child(tree, "output")) {
    require_object(*v, "output");
    reject_unknown(*v, "output", {"dir"});
    if (const json* d = child(*v, "dir")) c.out_dir = text(*d, "output.dir");
  }

  // Cross-block checks through the owning modules.
  const DirectedGraph graph = validated("topology", [&] { return build_graph(c); });
  const HypothesisModel built = validated("model", [&] { return build_model(c); });
  if (built.agent_count() != graph.size()) {
    config_error("model.agents", "has " + std::to_string(built.agent_count()) +
                                     " agents but the graph has " + std::to_string(graph.size()) +
                                     " nodes");
  }
  if (c.mode == RunMode::Raps && static_cast<int>(c.raps_initial.size()) != graph.size()) {
    config_error("raps.initial_x", "needs one value per node");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, path.string() + ": cannot open");
  json tree;
  try {
    tree = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return parse_config(tree, path.parent_path());
}

json to_json(const ExperimentConfig& c) {
  json out;
  out["name"] = c.name;
  if (c.topology.file) {
    out["topology"] = {{"file", c.topology.file->string()}};
  } else {
    out["topology"] = {{"kind", std::string(to_string(c.topology.kind))}, {"n", c.topology.n}};
  }
  json agents = json::array();
  for (const auto& a : c.agents) {
    json hyps = json::array();
    for (const auto& d : a.likelihoods) hyps.push_back(to_json(d));
    agents.push_back({{"truth", to_json(a.truth)}, {"hypotheses", hyps}});
  }
  out["model"] = {{"floor", c.floor}, {"agents", agents}};
  out["params"] = {{"L_del", c.params.max_delay},   {"L_u", c.params.max_sleep},
                   {"L_f", c.params.max_failures},  {"p_w", c.params.wake_prob},
                   {"p_l", c.params.loss_prob}};
  out["horizon"] = c.horizon;
  out["seed"] = c.seed;
  out["mode"] = std::string(to_string(c.mode));
  out["raps"] = {{"initial_x", c.raps_initial}};
  out["analysis"] = {{"window_fraction", c.window_fraction}};
  out["output"] = {{"dir", c.out_dir.string()}};
  return out;
}

// ---------------------------------------------------------------------------
// Calibrated model and presets

std::vector<HypothesisModel::Agent> calibrated_agents(double shift) {
  static constexpr double decoy_a[4] = {1.0, 3.0, 2.0, 4.0};
  static constexpr double decoy_b[4] = {1.9, 2.0, 3.9, 3.1};
  std::vector<HypothesisModel::Agent> agents;
  for (int i = 0; i < 4; ++i) {
    const double truth = i + 1.0;
    const double toward = (i % 2 == 0) ? shift : -shift;
    agents.push_back({Distribution::truncated_normal(truth, 1.0),
                      {Distribution::truncated_normal(decoy_a[i], 1.0),
                       Distribution::truncated_normal(decoy_b[i], 1.0),
                       Distribution::truncated_normal(truth + toward, 1.0)}});
  }
  return agents;
}

Calibration calibrate_shift(double target) {
  auto evaluate = [](double s) {
    const Objective obj = objective(HypothesisModel(calibrated_agents(s)));
    const bool unique = obj.optimal.size() == 1 && obj.optimal[0] == 2;
    return std::pair{obj, unique};
  };
  Calibration best;
  double best_miss = std::numeric_limits<double>::infinity();
  auto scan = [&](double lo, double hi, double step) {
    for (double s = lo; s <= hi + step / 2; s += step) {
      const double rounded = std::round(s / step) * step;
      const auto [obj, unique] = evaluate(rounded);
      if (!unique) continue;
      const double miss = std::abs(obj.values[2] - target);
      if (miss < best_miss) {
        best_miss = miss;
        best = Calibration{rounded, obj.values[2], obj.gap};
      }
    }
  };
  scan(0.0, 1.0, 1e-2);
  if (!std::isfinite(best_miss)) {
    throw Error(ErrorCode::InvalidModel, "no shift keeps the third hypothesis optimal");
  }
  const double centre = best.shift;
  scan(std::max(0.0, centre - 1e-2), centre + 1e-2, 1e-4);
  return best;
}

std::vector<std::string> preset_names() {
  return {"star-hi", "star-lo", "path-hi", "path-lo", "cycle-hi", "cycle-lo"};
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.name = std::string(name);
  c.agents = calibrated_agents(kCalibratedShift);
  const auto dash = name.find('-');
  const auto kind = dash == std::string_view::npos ? std::nullopt : parse_topology(name.substr(0, dash));
  const std::string_view level = dash == std::string_view::npos ? "" : name.substr(dash + 1);
  if (!kind || (level != "hi" && level != "lo")) {
    throw Error(ErrorCode::ConfigError, "preset: unknown name '" + std::string(name) + "'");
  }
  add_preset_network(c, *kind, level == "hi");
  c.out_dir = std::filesystem::path("out") / std::string(name);
  return c;
}

DirectedGraph build_graph(const ExperimentConfig& config) {
  if (config.topology.file) {
    std::ifstream in(*config.topology.file);
    if (!in) throw Error(ErrorCode::ConfigError, "topology.file: cannot open " + config.topology.file->string());
    return read_graph(in);
  }
  return standard_topology(config.topology.kind, config.topology.n);
}

HypothesisModel build_model(const ExperimentConfig& config) {
  return HypothesisModel(config.agents, config.floor);
}

// ---------------------------------------------------------------------------
// Output

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string belief_csv(const BeliefTrace& trace) {
  std::string out = "tick,agent,wake,y";
  for (int t = 0; t < trace.hypotheses(); ++t) out += ",belief_" + std::to_string(t);
  out += '\n';
  for (int k = 0; k <= trace.horizon(); ++k) {
    for (int i = 0; i < trace.agents(); ++i) {
      out += std::to_string(k);
      out += ',';
      out += std::to_string(i);
      out += trace.awake(k, i) ? ",1," : ",0,";
      out += format_double(trace.weight(k, i));
      for (int t = 0; t < trace.hypotheses(); ++t) {
        out += ',';
        out += format_double(trace.belief(k, i, t));
      }
      out += '\n';
    }
  }
  return out;
}

std::string raps_csv(const RapsTrace& trace) {
  std::string out = "tick,agent,wake,y,x,z\n";
  for (std::size_t k = 0; k < trace.z.size(); ++k) {
    for (int i = 0; i < trace.n; ++i) {
      out += std::to_string(k) + ',' + std::to_string(i) + (trace.wake[k][i] ? ",1," : ",0,");
      out += format_double(trace.y[k][i]) + ',' + format_double(trace.x[k][i]) + ',' +
             format_double(trace.z[k][i]) + '\n';
    }
  }
  return out;
}

int concentration_tick(const BeliefTrace& trace, int theta, double threshold) {
  int tick = -1;
  for (int k = trace.horizon(); k >= 0; --k) {
    for (int i = 0; i < trace.agents(); ++i) {
      if (!(trace.belief(k, i, theta) > threshold)) return tick;
    }
    tick = k;
  }
  return tick;
}

namespace {

json constants_json(const Theorem2Constants& c) {
  return {{"n", c.n},
          {"L_s", c.success_interval},
          {"log_alpha", c.log_alpha},
          {"log_n_alpha6", c.log_n_alpha6},
          {"log_delta", c.log_delta},
          {"log_neg_log_lambda", c.log_neg_log_lambda},
          {"one_minus_lambda", c.one_minus_lambda()}};
}

json check(double value, double tolerance) {
  return {{"value", value}, {"tolerance", tolerance}, {"pass", value <= tolerance}};
}

Outcome run_learning_experiment(const ExperimentConfig& config, const DirectedGraph& graph,
                                bool audit) {
  const HypothesisModel model = build_model(config);
  const Objective obj = objective(model);
  const ScheduleTrace schedule = schedule_for(graph, config.params, config.horizon, config.seed);
  RunOptions options;
  options.seed = config.seed;
  options.record_history = audit;
  const LearningRun run = run_learning(graph, model, schedule, options);
  const int n = graph.size();

  Outcome out;
  out.csv = belief_csv(run.trace);
  out.run["stale_dropped"] = run.stats.stale_dropped;
  out.run["messages_applied"] = run.stats.messages_applied;
  out.run["max_mass_residual"] = run.stats.max_mass_residual;

  json& r = out.report;
  r["constants"] = constants_json(theorem2_constants(n, config.params.max_delay,
                                                     config.params.max_sleep,
                                                     config.params.max_failures));
  r["objective"] = {{"F", obj.values}, {"optimal", obj.optimal}, {"optimum", obj.optimum},
                    {"gap", obj.gap}};

  json checks;
  checks["mass"] = check(run.stats.max_mass_residual, 1e-12 * n);
  checks["normalization"] = check(run.stats.max_normalization_error, 1e-9);

  const int best = obj.optimal.front();
  out.concentration_tick = concentration_tick(run.trace, best);
  double final_min = 1.0;
  for (int i = 0; i < n; ++i) final_min = std::min(final_min, run.trace.belief(config.horizon, i, best));
  r["concentration"] = {{"theta", best}, {"tick", out.concentration_tick},
                        {"final_min_belief", final_min}};

  if (obj.optimal.size() < static_cast<std::size_t>(model.hypothesis_count())) {
    const RateEstimate est = estimate_rate(run.trace, model, obj, config.window_fraction);
    json entries = json::array();
    for (const RateEntry& e : est.entries) {
      entries.push_back({{"agent", e.agent}, {"wrong", e.wrong}, {"best", e.best},
                         {"slope", e.slope}, {"predicted", e.predicted},
                         {"window_concentrated", e.window_concentrated}});
    }
    r["rate"] = {{"window", {est.window_start, est.window_end}}, {"mean_slope", est.mean_slope()},
                 {"bound", est.bound}, {"entries", entries}};
  }

  if (audit) {
    double worst = 0.0;
    json pairs = json::array();
    for (int v = 0; v < model.hypothesis_count(); ++v) {
      if (obj.is_optimal(v)) continue;
      const AuditReport a = audit_lemma1_recursions(graph, schedule, config.params, run, v, best);
      worst = std::max(worst, a.max_abs);
      pairs.push_back({{"wrong", v},        {"best", best},       {"phi_increment", a.phi_increment},
                       {"belief_ratio", a.belief_ratio},         {"upsilon", a.upsilon},
                       {"buffers", a.buffers}, {"weights", a.weights}, {"max_abs", a.max_abs},
                       {"max_rel", a.max_rel}, {"worst_tick", a.worst_tick}});
    }
    r["audit"] = pairs;
    checks["audit"] = check(worst, 1e-9);
  }
  r["checks"] = checks;
  out.passed = std::all_of(checks.begin(), checks.end(),
                           [](const json& c) { return c["pass"].get<bool>(); });
  r["pass"] = out.passed;
  return out;
}

Outcome run_raps_experiment(const ExperimentConfig& config, const DirectedGraph& graph) {
  if (static_cast<int>(config.raps_initial.size()) != graph.size()) {
    throw Error(ErrorCode::ConfigError, "raps.initial_x: needs one value per node");
  }
  RunOptions options;
  options.seed = config.seed;
  const RapsRun run = run_raps(graph, config.raps_initial, config.params, config.horizon, options);
  const Theorem2Constants constants =
      theorem2_constants(graph.size(), config.params.max_delay, config.params.max_sleep,
                         config.params.max_failures);
  const RapsDecayReport decay = check_raps_decay(run.trace, constants);

  Outcome out;
  out.csv = raps_csv(run.trace);
  out.run["stale_dropped"] = run.stats.stale_dropped;
  out.run["messages_applied"] = run.stats.messages_applied;
  out.run["max_mass_residual"] = run.stats.max_mass_residual;

  json& r = out.report;
  r["constants"] = constants_json(constants);
  r["decay"] = {{"mean", decay.mean},
                {"l1_norm", decay.l1_norm},
                {"bound_holds", decay.bound_holds},
                {"first_violation_tick", decay.first_violation_tick},
                {"max_error", decay.max_error},
                {"final_error", decay.final_error},
                {"max_log_slack", decay.max_log_slack},
                {"empirical_rate", decay.empirical_rate},
                {"fitted_points", decay.fitted_points}};
  json checks;
  checks["mass"] = check(run.stats.max_mass_residual, 1e-12 * graph.size());
  checks["consensus_bound"] = {{"value", decay.max_log_slack}, {"tolerance", 0.0},
                               {"pass", decay.bound_holds}};
  r["checks"] = checks;
  out.passed = checks["mass"]["pass"].get<bool>() && decay.bound_holds;
  r["pass"] = out.passed;
  return out;
}

}  // namespace

Outcome run_experiment(const ExperimentConfig& config, bool audit) {
  const DirectedGraph graph = build_graph(config);
  Outcome out = config.mode == RunMode::Raps
                    ? run_raps_experiment(config, graph)
                    : run_learning_experiment(config, graph, audit || config.mode == RunMode::Audit);
  json run;
  run["config"] = to_json(config);
  run["seed"] = config.seed;
  run["max_mass_residual"] = out.run["max_mass_residual"];
  run["stale_dropped"] = out.run["stale_dropped"];
  run["messages_applied"] = out.run["messages_applied"];
  out.run = std::move(run);
  return out;
}

void write_outcome(const Outcome& outcome, const ExperimentConfig& config,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& file, const std::string& body) {
    std::ofstream f(dir / file, std::ios::binary);
    if (!f) throw Error(ErrorCode::ConfigError, "output.dir: cannot write " + (dir / file).string());
    f << body;
  };
  write(config.mode == RunMode::Raps ? "raps.csv" : "beliefs.csv", outcome.csv);
  write("run.json", outcome.run.dump(2) + "\n");
  write("report.json", outcome.report.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Sweep

json SweepReport::to_json() const {
  json cells_json = json::array();
  for (const SweepCell& c : cells) {
    cells_json.push_back({{"preset", c.preset},
                          {"seed", c.seed},
                          {"concentration_tick", c.concentration_tick},
                          {"final_min_belief", c.final_min_belief},
                          {"pass", c.passed}});
  }
  return {{"cells", cells_json},
          {"runs", cells.size()},
          {"concentrated", concentrated}};
}

SweepReport sweep(const std::vector<ExperimentConfig>& configs,
                  const std::vector<std::uint64_t>& seeds, unsigned threads) {
  if (configs.empty()) throw Error(ErrorCode::EmptySweep, "no configs to sweep");
  if (seeds.empty()) throw Error(ErrorCode::EmptySweep, "no seeds to sweep");
  SweepReport report;
  report.cells.resize(configs.size() * seeds.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(report.cells.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t idx = next++; idx < report.cells.size(); idx = next++) {
      try {
        ExperimentConfig config = configs[idx / seeds.size()];
        config.seed = seeds[idx % seeds.size()];
        config.mode = RunMode::Learning;
        const Outcome out = run_experiment(config);
        SweepCell& cell = report.cells[idx];
        cell.preset = config.name;
        cell.seed = config.seed;
        cell.concentration_tick = out.concentration_tick;
        cell.final_min_belief = out.report["concentration"]["final_min_belief"].get<double>();
        cell.passed = out.passed;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (const SweepCell& c : report.cells) {
    if (c.concentration_tick >= 0) ++report.concentrated;
  }
  return report;
}

}  // namespace pushlearn
