#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pushlearn/graph.hpp"
#include "pushlearn/protocol.hpp"
#include "pushlearn/schedule.hpp"
#include "pushlearn/stats.hpp"

namespace pushlearn {

enum class ProtocolKind { Learning, Raps };

/// Fixed observation sequences, consumed one value per wake of each agent.
struct ObservationTape {
  std::vector<std::vector<double>> per_agent;
};

/// Skip the rho commit at `node`'s first wake at or after `from_tick` that
/// applies a fresh message. Used by negative-control tests only.
struct FaultInjection {
  int node = 0;
  int from_tick = 1;
};

struct RunOptions {
  std::uint64_t seed = 0;
  std::optional<ObservationTape> tape;
  bool record_history = false;
  std::optional<FaultInjection> fault;
};

/// Per-tick record of every agent, ticks 0 (initial state) through K.
/// Sleeping agents carry their last state forward.
class BeliefTrace {
 public:
  BeliefTrace() = default;
  BeliefTrace(int n, int m, int horizon);

  int agents() const noexcept { return n_; }
  int hypotheses() const noexcept { return m_; }
  int horizon() const noexcept { return horizon_; }

  double log_belief(int tick, int agent, int theta) const { return log_mu_[idx(tick, agent) * m_ + theta]; }
  double belief(int tick, int agent, int theta) const;
  double weight(int tick, int agent) const { return y_[idx(tick, agent)]; }
  bool awake(int tick, int agent) const { return wake_[idx(tick, agent)] != 0; }
  double mass_residual(int tick) const { return residual_[static_cast<std::size_t>(tick)]; }

  void record(int tick, std::span<const LearningNodeState> states, std::span<const std::uint8_t> wake,
              double residual);

  friend bool operator==(const BeliefTrace&, const BeliefTrace&) = default;

 private:
  std::size_t idx(int tick, int agent) const {
    return static_cast<std::size_t>(tick) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(agent);
  }

  int n_ = 0;
  int m_ = 0;
  int horizon_ = 0;
  std::vector<double> log_mu_;
  std::vector<double> y_;
  std::vector<std::uint8_t> wake_;
  std::vector<double> residual_;
};

struct RunStats {
  double max_mass_residual = 0.0;
  double max_normalization_error = 0.0;  // max |sum_theta mu - 1|
  long stale_dropped = 0;
  long messages_applied = 0;
};

/// Full state history for the recursion audit: states[k] is the network
/// after tick k; log_likelihoods[k][i] is the vector used at tick k (empty
/// when agent i slept).
struct LearningHistory {
  std::vector<std::vector<LearningNodeState>> states;
  std::vector<std::vector<std::vector<double>>> log_likelihoods;
};

struct LearningRun {
  BeliefTrace trace;
  RunStats stats;
  std::optional<LearningHistory> history;
};

struct RapsTrace {
  int n = 0;
  int horizon = 0;
  std::vector<double> initial;
  std::vector<std::vector<double>> x, y, z;  // [tick][agent], ticks 0..K
  std::vector<std::vector<std::uint8_t>> wake;
  std::vector<double> mass_residual;

  friend bool operator==(const RapsTrace&, const RapsTrace&) = default;
};

struct RapsRun {
  RapsTrace trace;
  RunStats stats;
};

/// Residual | sum_i y_i + sum_(i,j) (phi_i^y - rho_ij^y) - n | of the weight
/// mass, with link mass taken as sender cumulative minus receiver mirror.
double mass_audit(const DirectedGraph& graph, std::span<const LearningNodeState> states);
double mass_audit(const DirectedGraph& graph, std::span<const RapsNodeState> states);

/// Replays `schedule` through the learning protocol. Observations come from
/// the tape when given, otherwise from per-agent streams split off
/// options.seed. Throws propagated protocol errors and
/// Error{ObservationTapeExhausted, DimensionMismatch}.
LearningRun run_learning(const DirectedGraph& graph, const HypothesisModel& model,
                         const ScheduleTrace& schedule, const RunOptions& options = {});

RapsRun run_raps(const DirectedGraph& graph, std::span<const double> initial,
                 const ScheduleTrace& schedule, const RunOptions& options = {});

/// Schedule drawn from the seed's schedule stream.
ScheduleTrace schedule_for(const DirectedGraph& graph, const NetworkParams& params, int horizon,
                           std::uint64_t seed);

/// Generates the schedule from (params, horizon, seed) and runs.
LearningRun run_learning(const DirectedGraph& graph, const HypothesisModel& model,
                         const NetworkParams& params, int horizon, const RunOptions& options);
RapsRun run_raps(const DirectedGraph& graph, std::span<const double> initial,
                 const NetworkParams& params, int horizon, const RunOptions& options);

}  // namespace pushlearn
