#include "pushlearn/engine.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "pushlearn/error.hpp"

namespace pushlearn {
namespace {

template <typename State>
double mass_residual(const DirectedGraph& graph, std::span<const State> states) {
  double total = 0.0;
  for (const State& s : states) total += s.y;
  for (int j = 0; j < graph.size(); ++j) {
    for (const auto& mirror : states[j].mirrors) {
      total += states[mirror.sender].phi_y - mirror.rho_y;
    }
  }
  return std::abs(total - static_cast<double>(graph.size()));
}

template <typename Message>
struct InFlight {
  int arrival = 0;
  Message message;
};

// Shared tick loop. `step(i, inbox, tick, faults)` performs node i's wake and
// returns the message to broadcast plus the stale-drop count; `record(tick)`
// snapshots the network after each tick.
template <typename State, typename Message, typename Step, typename Record>
RunStats drive(const DirectedGraph& graph, const ScheduleTrace& schedule,
               std::vector<State>& states, const RunOptions& options, Step&& step,
               Record&& record) {
  if (schedule.size() != graph.size()) {
    throw Error(ErrorCode::DimensionMismatch, "schedule and graph disagree on node count");
  }
  if (schedule.horizon() < 1) throw Error(ErrorCode::DimensionMismatch, "horizon must be >= 1");

  RunStats stats;
  const int n = graph.size();
  std::vector<std::deque<InFlight<Message>>> links(graph.edge_count());
  std::vector<std::vector<Message>> inbox(static_cast<std::size_t>(n));
  bool fault_pending = options.fault.has_value();

  stats.max_mass_residual = mass_residual<State>(graph, states);
  record(0, stats.max_mass_residual);

  for (int k = 1; k <= schedule.horizon(); ++k) {
    for (std::size_t e = 0; e < graph.edge_count(); ++e) {
      auto& queue = links[e];
      while (!queue.empty() && queue.front().arrival <= k) {
        inbox[graph.edges()[e].to].push_back(std::move(queue.front().message));
        queue.pop_front();
      }
    }
    for (int i = 0; i < n; ++i) {
      if (!schedule.awake(k, i)) continue;
      StepFaults faults;
      if (fault_pending && options.fault->node == i && k >= options.fault->from_tick &&
          !inbox[i].empty()) {
        faults.skip_rho_commit = true;
        fault_pending = false;
      }
      auto [broadcast, stale] = step(i, std::span<const Message>(inbox[i]), k, faults);
      stats.stale_dropped += stale;
      stats.messages_applied += static_cast<long>(inbox[i].size()) - stale;
      inbox[i].clear();
      for (std::size_t e : graph.out_edges(i)) {
        const Edge link = graph.edges()[e];
        const Transmission* t = schedule.find(k, link.from, link.to);
        if (t == nullptr) {
          throw Error(ErrorCode::DimensionMismatch,
                      "schedule lacks an outcome for link (" + std::to_string(link.from) + "," +
                          std::to_string(link.to) + ") at tick " + std::to_string(k));
        }
        if (t->delivered) links[e].push_back({t->arrival(), broadcast});
      }
    }
    const double residual = mass_residual<State>(graph, states);
    stats.max_mass_residual = std::max(stats.max_mass_residual, residual);
    record(k, residual);
  }
  return stats;
}

}  // namespace

BeliefTrace::BeliefTrace(int n, int m, int horizon)
    : n_(n),
      m_(m),
      horizon_(horizon),
      log_mu_(static_cast<std::size_t>(horizon + 1) * n * m),
      y_(static_cast<std::size_t>(horizon + 1) * n),
      wake_(static_cast<std::size_t>(horizon + 1) * n),
      residual_(static_cast<std::size_t>(horizon + 1)) {}

double BeliefTrace::belief(int tick, int agent, int theta) const {
  return std::exp(log_belief(tick, agent, theta));
}

void BeliefTrace::record(int tick, std::span<const LearningNodeState> states,
                         std::span<const std::uint8_t> wake, double residual) {
  for (int i = 0; i < n_; ++i) {
    const std::size_t base = idx(tick, i);
    for (int t = 0; t < m_; ++t) log_mu_[base * m_ + t] = states[i].log_mu[t];
    y_[base] = states[i].y;
    wake_[base] = wake[i];
  }
  residual_[static_cast<std::size_t>(tick)] = residual;
}

double mass_audit(const DirectedGraph& graph, std::span<const LearningNodeState> states) {
  return mass_residual<LearningNodeState>(graph, states);
}

double mass_audit(const DirectedGraph& graph, std::span<const RapsNodeState> states) {
  return mass_residual<RapsNodeState>(graph, states);
}

LearningRun run_learning(const DirectedGraph& graph, const HypothesisModel& model,
                         const ScheduleTrace& schedule, const RunOptions& options) {
  std::vector<LearningNodeState> states = init_learning_network(graph, model);
  const int n = graph.size();
  const int m = model.hypothesis_count();

  std::vector<NodeContext> contexts;
  for (int i = 0; i < n; ++i) contexts.push_back(NodeContext::of(graph, i));

  std::vector<RngStream> streams;
  for (int i = 0; i < n; ++i) {
    streams.emplace_back(options.seed, StreamKind::Observation, static_cast<std::uint64_t>(i));
  }
  if (options.tape && static_cast<int>(options.tape->per_agent.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "observation tape agent count differs");
  }
  std::vector<std::size_t> consumed(static_cast<std::size_t>(n), 0);

  LearningRun run;
  run.trace = BeliefTrace(n, m, schedule.horizon());
  if (options.record_history) {
    run.history.emplace();
    run.history->states.reserve(static_cast<std::size_t>(schedule.horizon()) + 1);
    run.history->log_likelihoods.assign(static_cast<std::size_t>(schedule.horizon()) + 1,
                                        std::vector<std::vector<double>>(static_cast<std::size_t>(n)));
  }
  std::vector<std::uint8_t> wake(static_cast<std::size_t>(n), 0);
  std::vector<double> lik(static_cast<std::size_t>(m));

  auto step = [&](int i, std::span<const LearningMessage> inbox, int tick, StepFaults faults) {
    double x;
    if (options.tape) {
      const auto& tape = options.tape->per_agent[i];
      if (consumed[i] >= tape.size()) {
        throw Error(ErrorCode::ObservationTapeExhausted,
                    "agent " + std::to_string(i) + " at tick " + std::to_string(tick));
      }
      x = tape[consumed[i]++];
    } else {
      x = model.sample(i, streams[i]);
    }
    model.log_likelihoods(i, x, lik);
    if (run.history) run.history->log_likelihoods[tick][i] = lik;
    auto result = learning_wake_step(states[i], i, contexts[i], inbox, lik, tick, faults);
    states[i] = std::move(result.state);
    return std::pair{std::move(result.broadcast), result.stale_dropped};
  };
  auto record = [&](int tick, double residual) {
    for (int i = 0; i < n; ++i) wake[i] = tick > 0 && schedule.awake(tick, i) ? 1 : 0;
    run.trace.record(tick, states, wake, residual);
    for (const LearningNodeState& s : states) {
      double total = 0.0;
      for (double lm : s.log_mu) total += std::exp(lm);
      run.stats.max_normalization_error =
          std::max(run.stats.max_normalization_error, std::abs(total - 1.0));
    }
    if (run.history) run.history->states.push_back(states);
  };

  const RunStats core = drive<LearningNodeState, LearningMessage>(graph, schedule, states, options,
                                                                  step, record);
  run.stats.max_mass_residual = core.max_mass_residual;
  run.stats.stale_dropped = core.stale_dropped;
  run.stats.messages_applied = core.messages_applied;
  return run;
}

RapsRun run_raps(const DirectedGraph& graph, std::span<const double> initial,
                 const ScheduleTrace& schedule, const RunOptions& options) {
  std::vector<RapsNodeState> states = init_raps_network(graph, initial);
  const int n = graph.size();
  std::vector<NodeContext> contexts;
  for (int i = 0; i < n; ++i) contexts.push_back(NodeContext::of(graph, i));

  RapsRun run;
  RapsTrace& tr = run.trace;
  tr.n = n;
  tr.horizon = schedule.horizon();
  tr.initial.assign(initial.begin(), initial.end());

  auto step = [&](int i, std::span<const RapsMessage> inbox, int tick, StepFaults faults) {
    auto result = raps_wake_step(states[i], i, contexts[i], inbox, tick, faults);
    states[i] = result.state;
    return std::pair{result.broadcast, result.stale_dropped};
  };
  auto record = [&](int tick, double residual) {
    std::vector<double> x, y, z;
    std::vector<std::uint8_t> wake;
    for (int i = 0; i < n; ++i) {
      x.push_back(states[i].x);
      y.push_back(states[i].y);
      z.push_back(states[i].z);
      wake.push_back(tick > 0 && schedule.awake(tick, i) ? 1 : 0);
    }
    tr.x.push_back(std::move(x));
    tr.y.push_back(std::move(y));
    tr.z.push_back(std::move(z));
    tr.wake.push_back(std::move(wake));
    tr.mass_residual.push_back(residual);
  };
  run.stats = drive<RapsNodeState, RapsMessage>(graph, schedule, states, options, step, record);
  return run;
}

ScheduleTrace schedule_for(const DirectedGraph& graph, const NetworkParams& params, int horizon,
                           std::uint64_t seed) {
  RngStream rng(seed, StreamKind::Schedule, 0);
  return generate_schedule(params, graph, horizon, rng);
}

LearningRun run_learning(const DirectedGraph& graph, const HypothesisModel& model,
                         const NetworkParams& params, int horizon, const RunOptions& options) {
  return run_learning(graph, model, schedule_for(graph, params, horizon, options.seed), options);
}

RapsRun run_raps(const DirectedGraph& graph, std::span<const double> initial,
                 const NetworkParams& params, int horizon, const RunOptions& options) {
  return run_raps(graph, initial, schedule_for(graph, params, horizon, options.seed), options);
}

}  // namespace pushlearn
