#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pushlearn/graph.hpp"
#include "pushlearn/rng.hpp"

namespace pushlearn {

/// Bounds and probabilities of the asynchronous network.
struct NetworkParams {
  int max_delay = 1;          // L_del
  int max_sleep = 1;          // L_u
  int max_failures = 1;       // L_f
  double wake_prob = 1.0;     // p_w
  double loss_prob = 0.0;     // p_l

  /// Largest send-to-processing lag: L_del + L_u - 1.
  int effective_delay_bound() const noexcept { return max_delay + max_sleep - 1; }
  /// Guaranteed success interval L_s = L_u (L_f + 1) + (L_del + L_u - 1).
  int success_interval() const noexcept {
    return max_sleep * (max_failures + 1) + effective_delay_bound();
  }

  /// Throws Error{InvalidParams} naming the offending field.
  void validate() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Outcome of one broadcast on one link. Ticks are 1-based.
struct Transmission {
  int tick = 0;
  int from = 0;
  int to = 0;
  bool delivered = false;
  int delay = 0;  // arrival tick - send tick; meaningful when delivered

  int arrival() const noexcept { return tick + delay; }
  friend bool operator==(const Transmission&, const Transmission&) = default;
};

/// Fully materialized wake/loss/delay schedule over ticks 1..horizon.
class ScheduleTrace {
 public:
  ScheduleTrace() = default;
  ScheduleTrace(int horizon, int n);

  int horizon() const noexcept { return horizon_; }
  int size() const noexcept { return n_; }

  bool awake(int tick, int node) const {
    return wake_[index(tick, node)] != 0;
  }
  void set_awake(int tick, int node, bool value) { wake_[index(tick, node)] = value ? 1 : 0; }

  /// Transmissions ordered by (tick, from, to).
  const std::vector<Transmission>& transmissions() const noexcept { return transmissions_; }
  void add(const Transmission& t);
  /// Restores (tick, from, to) order after out-of-order add() calls.
  void sort();

  /// Outcome of the broadcast sent at `tick` on link (from, to), if recorded.
  const Transmission* find(int tick, int from, int to) const;

  friend bool operator==(const ScheduleTrace&, const ScheduleTrace&) = default;

 private:
  std::size_t index(int tick, int node) const {
    return static_cast<std::size_t>(tick - 1) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(node);
  }

  int horizon_ = 0;
  int n_ = 0;
  std::vector<std::uint8_t> wake_;
  std::vector<Transmission> transmissions_;
};

/// Random trace with forced wake after L_u - 1 consecutive sleeps, forced
/// delivery after L_f consecutive losses, delays uniform on {1..L_del} and
/// inflated just enough to keep per-link arrivals in send order.
ScheduleTrace generate_schedule(const NetworkParams& params, const DirectedGraph& graph,
                                int horizon, RngStream& rng);

/// Every node awake every tick, every message delivered after one tick.
ScheduleTrace synchronous_schedule(const DirectedGraph& graph, int horizon);

enum class Clause { A, B, C, D, E, Structure };
std::string_view to_string(Clause clause);

struct Violation {
  Clause clause = Clause::Structure;
  int tick = 0;
  int node = -1;  // sleeping node (clause c) or sender
  int to = -1;    // receiver for link clauses
  std::string detail;
};

/// First violated clause of the network assumptions, or nullopt.
/// Throws Error{DimensionMismatch} if the trace does not fit the graph.
std::optional<Violation> validate_schedule(const ScheduleTrace& trace, const NetworkParams& params,
                                           const DirectedGraph& graph);

/// One-hot delay indicators. `wake[k-1][i]` is tau_i(k); `link_delay[e][k-1]`
/// is the l with tau_ij^l(k) = 1 for edge index e (0 when no delivery), so
/// sum_l tau_ij^l(k) is 0 or 1 by construction.
struct TauTables {
  int horizon = 0;
  int max_delay = 0;
  std::vector<std::vector<std::uint8_t>> wake;
  std::vector<std::vector<int>> link_delay;

  int tau_node(int tick, int node) const { return wake[tick - 1][node]; }
  int tau_link(std::size_t edge, int tick, int l) const {
    return link_delay[edge][tick - 1] == l ? 1 : 0;
  }
};

/// Arrival-based indicators: l = arrival tick - send tick.
TauTables tau_indicators(const ScheduleTrace& trace, const DirectedGraph& graph);

/// Processing-based indicators: l = (receiver's first wake at or after the
/// arrival) - send tick. When several messages on one link are consumed at
/// the same wake only the newest counts as delivered; the superseded ones
/// are treated as failures because their content is carried by the newer
/// cumulative snapshot. Messages never consumed within the horizon get 0.
TauTables effective_delays(const ScheduleTrace& trace, const DirectedGraph& graph);

/// Text format: header `K n L_del L_u L_f`, then K rows of n 0/1 wake flags,
/// then one line `k i j L` or `k i j D d` per transmission.
void write_trace(std::ostream& out, const ScheduleTrace& trace, const NetworkParams& params);
struct LoadedTrace {
  ScheduleTrace trace;
  NetworkParams params;  // bounds from the header; probabilities left default
};
LoadedTrace read_trace(std::istream& in);

}  // namespace pushlearn
