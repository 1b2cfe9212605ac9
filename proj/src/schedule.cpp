#include "pushlearn/schedule.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "pushlearn/error.hpp"

namespace pushlearn {
namespace {

auto order_key(const Transmission& t) { return std::tuple(t.tick, t.from, t.to); }

Violation make_violation(Clause clause, int tick, int node, int to, std::string detail) {
  return Violation{clause, tick, node, to, std::move(detail)};
}

std::string link_name(int from, int to) {
  return "(" + std::to_string(from) + "," + std::to_string(to) + ")";
}

}  // namespace

void NetworkParams::validate() const {
  auto fail = [](const char* field, const std::string& why) {
    throw Error(ErrorCode::InvalidParams, std::string(field) + ": " + why);
  };
  if (max_delay < 1) fail("L_del", "must be >= 1");
  if (max_sleep < 1) fail("L_u", "must be >= 1");
  if (max_failures < 1) fail("L_f", "must be >= 1");
  if (!(wake_prob > 0.0 && wake_prob <= 1.0)) fail("p_w", "must lie in (0, 1]");
  if (!(loss_prob >= 0.0 && loss_prob < 1.0)) fail("p_l", "must lie in [0, 1)");
}

ScheduleTrace::ScheduleTrace(int horizon, int n)
    : horizon_(horizon),
      n_(n),
      wake_(static_cast<std::size_t>(std::max(horizon, 0)) * static_cast<std::size_t>(std::max(n, 0)), 0) {}

void ScheduleTrace::add(const Transmission& t) {
  if (!transmissions_.empty() && order_key(t) < order_key(transmissions_.back())) {
    transmissions_.push_back(t);
    sort();
    return;
  }
  transmissions_.push_back(t);
}

void ScheduleTrace::sort() {
  std::stable_sort(transmissions_.begin(), transmissions_.end(),
                   [](const Transmission& a, const Transmission& b) {
                     return order_key(a) < order_key(b);
                   });
}

const Transmission* ScheduleTrace::find(int tick, int from, int to) const {
  const Transmission key{tick, from, to, false, 0};
  auto it = std::lower_bound(
      transmissions_.begin(), transmissions_.end(), key,
      [](const Transmission& a, const Transmission& b) { return order_key(a) < order_key(b); });
  if (it == transmissions_.end() || order_key(*it) != order_key(key)) return nullptr;
  return &*it;
}

ScheduleTrace generate_schedule(const NetworkParams& params, const DirectedGraph& graph,
                                int horizon, RngStream& rng) {
  params.validate();
  const int n = graph.size();
  ScheduleTrace trace(horizon, n);
  std::vector<int> sleep_run(static_cast<std::size_t>(n), 0);
  std::vector<int> loss_run(graph.edge_count(), 0);
  std::vector<int> last_arrival(graph.edge_count(), 0);

  for (int k = 1; k <= horizon; ++k) {
    for (int i = 0; i < n; ++i) {
      const bool forced = sleep_run[i] >= params.max_sleep - 1;
      const bool awake = forced || rng.bernoulli(params.wake_prob);
      trace.set_awake(k, i, awake);
      sleep_run[i] = awake ? 0 : sleep_run[i] + 1;
    }
    for (std::size_t e = 0; e < graph.edge_count(); ++e) {
      const Edge link = graph.edges()[e];
      if (!trace.awake(k, link.from)) continue;
      const bool forced = loss_run[e] >= params.max_failures;
      const bool lost = !forced && rng.bernoulli(params.loss_prob);
      if (lost) {
        ++loss_run[e];
        trace.add({k, link.from, link.to, false, 0});
        continue;
      }
      loss_run[e] = 0;
      int delay = static_cast<int>(rng.uniform_int(1, params.max_delay));
      // The previous arrival is at most (k - 1) + L_del, so the floor never
      // exceeds L_del.
      delay = std::max(delay, last_arrival[e] - k + 1);
      last_arrival[e] = k + delay;
      trace.add({k, link.from, link.to, true, delay});
    }
  }
  return trace;
}

ScheduleTrace synchronous_schedule(const DirectedGraph& graph, int horizon) {
  ScheduleTrace trace(horizon, graph.size());
  for (int k = 1; k <= horizon; ++k) {
    for (int i = 0; i < graph.size(); ++i) trace.set_awake(k, i, true);
    for (const Edge& e : graph.edges()) trace.add({k, e.from, e.to, true, 1});
  }
  return trace;
}

std::string_view to_string(Clause clause) {
  switch (clause) {
    case Clause::A: return "a";
    case Clause::B: return "b";
    case Clause::C: return "c";
    case Clause::D: return "d";
    case Clause::E: return "e";
    case Clause::Structure: return "structure";
  }
  return "unknown";
}

std::optional<Violation> validate_schedule(const ScheduleTrace& trace, const NetworkParams& params,
                                           const DirectedGraph& graph) {
  if (trace.size() != graph.size()) {
    throw Error(ErrorCode::DimensionMismatch, "trace has " + std::to_string(trace.size()) +
                                                  " nodes, graph has " +
                                                  std::to_string(graph.size()));
  }
  if (trace.horizon() < 1) throw Error(ErrorCode::DimensionMismatch, "empty trace horizon");
  const int horizon = trace.horizon();
  const auto& all = trace.transmissions();

  // (a): traffic only on links of the loop-free, strongly connected graph.
  for (const Transmission& t : all) {
    if (t.from == t.to) {
      return make_violation(Clause::A, t.tick, t.from, t.to, "self-loop transmission");
    }
    if (t.from < 0 || t.from >= graph.size() || t.to < 0 || t.to >= graph.size() ||
        !graph.edge_index(t.from, t.to)) {
      return make_violation(Clause::A, t.tick, t.from, t.to,
                            "transmission on " + link_name(t.from, t.to) + " which is not a link");
    }
  }

  // One record per awake sender and out-link, none for sleeping senders.
  for (std::size_t k = 0; k < all.size(); ++k) {
    const Transmission& t = all[k];
    if (t.tick < 1 || t.tick > horizon) {
      return make_violation(Clause::Structure, t.tick, t.from, t.to, "tick outside horizon");
    }
    if (!trace.awake(t.tick, t.from)) {
      return make_violation(Clause::Structure, t.tick, t.from, t.to, "sleeping node transmitted");
    }
    if (k > 0 && order_key(all[k - 1]) == order_key(t)) {
      return make_violation(Clause::Structure, t.tick, t.from, t.to, "duplicate record");
    }
  }
  for (int k = 1; k <= horizon; ++k) {
    for (const Edge& e : graph.edges()) {
      if (trace.awake(k, e.from) && trace.find(k, e.from, e.to) == nullptr) {
        return make_violation(Clause::Structure, k, e.from, e.to,
                              "awake sender has no outcome on " + link_name(e.from, e.to));
      }
    }
  }

  // (b): bounded link delays.
  for (const Transmission& t : all) {
    if (t.delivered && (t.delay < 1 || t.delay > params.max_delay)) {
      return make_violation(Clause::B, t.tick, t.from, t.to,
                            "delay " + std::to_string(t.delay) + " outside [1, " +
                                std::to_string(params.max_delay) + "]");
    }
  }

  // (c): no run of L_u consecutive sleeps.
  for (int i = 0; i < graph.size(); ++i) {
    int run = 0;
    for (int k = 1; k <= horizon; ++k) {
      run = trace.awake(k, i) ? 0 : run + 1;
      if (run >= params.max_sleep) {
        return make_violation(Clause::C, k, i, -1,
                              "node slept " + std::to_string(run) + " consecutive ticks");
      }
    }
  }

  // (d): at most L_f consecutive losses per link.
  std::vector<int> loss_run(graph.edge_count(), 0);
  for (const Transmission& t : all) {
    const std::size_t e = *graph.edge_index(t.from, t.to);
    loss_run[e] = t.delivered ? 0 : loss_run[e] + 1;
    if (loss_run[e] > params.max_failures) {
      return make_violation(Clause::D, t.tick, t.from, t.to,
                            std::to_string(loss_run[e]) + " consecutive losses");
    }
  }

  // (e): per-link arrivals strictly increasing in send order.
  std::vector<int> last_arrival(graph.edge_count(), 0);
  for (const Transmission& t : all) {
    if (!t.delivered) continue;
    const std::size_t e = *graph.edge_index(t.from, t.to);
    if (t.arrival() <= last_arrival[e]) {
      return make_violation(Clause::E, t.tick, t.from, t.to,
                            "arrival " + std::to_string(t.arrival()) + " not after " +
                                std::to_string(last_arrival[e]));
    }
    last_arrival[e] = t.arrival();
  }
  return std::nullopt;
}

namespace {

TauTables empty_tables(const ScheduleTrace& trace, const DirectedGraph& graph) {
  TauTables tables;
  tables.horizon = trace.horizon();
  tables.wake.assign(static_cast<std::size_t>(trace.horizon()),
                     std::vector<std::uint8_t>(static_cast<std::size_t>(graph.size()), 0));
  for (int k = 1; k <= trace.horizon(); ++k) {
    for (int i = 0; i < graph.size(); ++i) tables.wake[k - 1][i] = trace.awake(k, i) ? 1 : 0;
  }
  tables.link_delay.assign(graph.edge_count(),
                           std::vector<int>(static_cast<std::size_t>(trace.horizon()), 0));
  return tables;
}

}  // namespace

TauTables tau_indicators(const ScheduleTrace& trace, const DirectedGraph& graph) {
  TauTables tables = empty_tables(trace, graph);
  for (const Transmission& t : trace.transmissions()) {
    if (!t.delivered) continue;
    const auto e = graph.edge_index(t.from, t.to);
    if (!e) throw Error(ErrorCode::DimensionMismatch, "transmission on unknown link");
    tables.link_delay[*e][t.tick - 1] = t.delay;
    tables.max_delay = std::max(tables.max_delay, t.delay);
  }
  return tables;
}

TauTables effective_delays(const ScheduleTrace& trace, const DirectedGraph& graph) {
  TauTables tables = empty_tables(trace, graph);
  const int horizon = trace.horizon();
  // next_wake[i][k] = first tick >= k at which node i is awake (horizon + 1 if none).
  std::vector<std::vector<int>> next_wake(static_cast<std::size_t>(graph.size()),
                                          std::vector<int>(static_cast<std::size_t>(horizon) + 2));
  for (int i = 0; i < graph.size(); ++i) {
    next_wake[i][horizon + 1] = horizon + 1;
    for (int k = horizon; k >= 1; --k) {
      next_wake[i][k] = trace.awake(k, i) ? k : next_wake[i][k + 1];
    }
  }
  std::vector<const Transmission*> pending(graph.edge_count(), nullptr);
  std::vector<int> pending_consume(graph.edge_count(), 0);
  auto flush = [&](std::size_t e) {
    if (pending[e] == nullptr) return;
    const int l = pending_consume[e] - pending[e]->tick;
    tables.link_delay[e][pending[e]->tick - 1] = l;
    tables.max_delay = std::max(tables.max_delay, l);
    pending[e] = nullptr;
  };
  for (const Transmission& t : trace.transmissions()) {
    if (!t.delivered) continue;
    const auto e = graph.edge_index(t.from, t.to);
    if (!e) throw Error(ErrorCode::DimensionMismatch, "transmission on unknown link");
    const int consume = t.arrival() <= horizon ? next_wake[t.to][t.arrival()] : horizon + 1;
    if (consume > horizon) continue;
    if (pending[*e] != nullptr && pending_consume[*e] != consume) flush(*e);
    // Same consumption tick: the newer snapshot supersedes the pending one.
    pending[*e] = &t;
    pending_consume[*e] = consume;
  }
  for (std::size_t e = 0; e < graph.edge_count(); ++e) flush(e);
  return tables;
}

void write_trace(std::ostream& out, const ScheduleTrace& trace, const NetworkParams& params) {
  out << trace.horizon() << ' ' << trace.size() << ' ' << params.max_delay << ' '
      << params.max_sleep << ' ' << params.max_failures << '\n';
  for (int k = 1; k <= trace.horizon(); ++k) {
    for (int i = 0; i < trace.size(); ++i) {
      if (i > 0) out << ' ';
      out << (trace.awake(k, i) ? 1 : 0);
    }
    out << '\n';
  }
  for (const Transmission& t : trace.transmissions()) {
    out << t.tick << ' ' << t.from << ' ' << t.to << ' ';
    if (t.delivered) {
      out << "D " << t.delay;
    } else {
      out << 'L';
    }
    out << '\n';
  }
}

LoadedTrace read_trace(std::istream& in) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::TraceFormat, why); };
  LoadedTrace loaded;
  int horizon = 0;
  int n = 0;
  if (!(in >> horizon >> n >> loaded.params.max_delay >> loaded.params.max_sleep >>
        loaded.params.max_failures)) {
    fail("trace header must be 'K n L_del L_u L_f'");
  }
  if (horizon < 1 || n < 1) fail("trace header has non-positive dimensions");
  loaded.trace = ScheduleTrace(horizon, n);
  for (int k = 1; k <= horizon; ++k) {
    for (int i = 0; i < n; ++i) {
      int flag = -1;
      if (!(in >> flag) || (flag != 0 && flag != 1)) {
        fail("wake row " + std::to_string(k) + " malformed");
      }
      loaded.trace.set_awake(k, i, flag == 1);
    }
  }
  Transmission t;
  std::string kind;
  while (in >> t.tick >> t.from >> t.to >> kind) {
    if (kind == "L") {
      t.delivered = false;
      t.delay = 0;
    } else if (kind == "D") {
      t.delivered = true;
      if (!(in >> t.delay)) fail("delivered transmission lacks a delay");
    } else {
      fail("transmission outcome must be L or D, got '" + kind + "'");
    }
    loaded.trace.add(t);
  }
  if (!in.eof()) fail("trailing garbage in trace file");
  return loaded;
}

}  // namespace pushlearn
