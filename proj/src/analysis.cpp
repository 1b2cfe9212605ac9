#include "pushlearn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pushlearn/error.hpp"
#include "pushlearn/protocol.hpp"

namespace pushlearn {

// ---------------------------------------------------------------------------
// Consensus constants

double Theorem2Constants::alpha() const { return std::exp(log_alpha); }
double Theorem2Constants::delta() const { return std::exp(log_delta); }
double Theorem2Constants::lambda() const { return std::exp(-std::exp(log_neg_log_lambda)); }
double Theorem2Constants::one_minus_lambda() const {
  return -std::expm1(-std::exp(log_neg_log_lambda));
}
double Theorem2Constants::log_bound(double k, double l1_norm) const {
  return log_delta - k * std::exp(log_neg_log_lambda) + std::log(l1_norm);
}

Theorem2Constants theorem2_constants(int n, int max_delay, int max_sleep, int max_failures) {
  if (n < 2 || max_delay < 1 || max_sleep < 1 || max_failures < 1) {
    throw Error(ErrorCode::InvalidParams, "constants need n >= 2 and L_del, L_u, L_f >= 1");
  }
  Theorem2Constants c;
  c.n = n;
  c.success_interval = max_sleep * (max_failures + 1) + (max_delay + max_sleep - 1);
  const double log_n = std::log(static_cast<double>(n));
  const double n_ls = static_cast<double>(n) * c.success_interval;
  c.log_alpha = -n_ls * log_n;
  c.log_n_alpha6 = log_n + 6.0 * c.log_alpha;
  if (c.log_n_alpha6 >= 0.0) {
    throw Error(ErrorCode::DegenerateBound, "n alpha^6 >= 1");
  }
  const double x = std::exp(c.log_n_alpha6);  // may underflow to 0
  c.log_delta = -std::log1p(-x);
  // log(-log1p(-x)) = log x + log(-log1p(-x) / x); the correction is x/2 + O(x^2).
  const double log_neg_log1p =
      x < 1e-4 ? c.log_n_alpha6 + std::log1p(x / 2.0 + x * x / 3.0) : std::log(-std::log1p(-x));
  c.log_neg_log_lambda = log_neg_log1p - std::log(2.0 * n_ls);
  return c;
}

RapsDecayReport check_raps_decay(const RapsTrace& trace, const Theorem2Constants& constants) {
  RapsDecayReport report;
  const int n = trace.n;
  for (double v : trace.initial) {
    report.mean += v;
    report.l1_norm += std::abs(v);
  }
  report.mean /= n;
  report.max_log_slack = -std::numeric_limits<double>::infinity();

  double sk = 0.0, se = 0.0, skk = 0.0, ske = 0.0;
  const auto ticks = static_cast<int>(trace.z.size());
  for (int k = 0; k < ticks; ++k) {
    for (int i = 0; i < n; ++i) {
      const double e = std::abs(trace.z[k][i] - report.mean);
      report.max_error = std::max(report.max_error, e);
      if (k + 1 == ticks) report.final_error = std::max(report.final_error, e);
      if (e == 0.0) continue;
      const double slack = std::log(e) - constants.log_bound(k, report.l1_norm);
      report.max_log_slack = std::max(report.max_log_slack, slack);
      if (slack > 0.0 && report.bound_holds) {
        report.bound_holds = false;
        report.first_violation_tick = k;
      }
      if (e > 1e-13) {
        const double le = std::log(e);
        sk += k;
        se += le;
        skk += static_cast<double>(k) * k;
        ske += k * le;
        ++report.fitted_points;
      }
    }
  }
  if (report.fitted_points >= 2) {
    const double m = report.fitted_points;
    const double denom = m * skk - sk * sk;
    if (denom > 0.0) report.empirical_rate = std::exp((m * ske - sk * se) / denom);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Belief concentration rate

double RateEstimate::mean_slope() const {
  if (entries.empty()) return 0.0;
  double total = 0.0;
  for (const RateEntry& e : entries) total += e.slope;
  return total / static_cast<double>(entries.size());
}

RateEstimate estimate_rate(const BeliefTrace& trace, const HypothesisModel& model,
                           const Objective& objective, double window_fraction) {
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw Error(ErrorCode::WindowTooShort, "window fraction must lie in (0, 1]");
  }
  const int horizon = trace.horizon();
  const int start = static_cast<int>(std::floor((1.0 - window_fraction) * horizon));
  if (horizon - start < 1) {
    throw Error(ErrorCode::WindowTooShort, "window covers no ticks");
  }
  const int n = trace.agents();
  const int m = trace.hypotheses();

  RateEstimate est;
  est.window_start = start;
  est.window_end = horizon;
  est.bound = std::isfinite(objective.gap) ? -objective.gap / n : 0.0;
  const double span = horizon - start;
  for (int v = 0; v < m; ++v) {
    if (objective.is_optimal(v)) continue;
    for (int w : objective.optimal) {
      double predicted = 0.0;
      for (int i = 0; i < n; ++i) {
        predicted += kl_divergence(model.likelihood(i, w), model.likelihood(i, v));
      }
      predicted = -predicted / n;
      for (int i = 0; i < n; ++i) {
        RateEntry entry;
        entry.agent = i;
        entry.wrong = v;
        entry.best = w;
        entry.predicted = predicted;
        const double lr_end = trace.log_belief(horizon, i, v) - trace.log_belief(horizon, i, w);
        const double lr_start = trace.log_belief(start, i, v) - trace.log_belief(start, i, w);
        entry.slope = (lr_end - lr_start) / span;
        entry.window_concentrated = true;
        for (int k = start; k <= horizon; ++k) {
          if (trace.log_belief(k, i, v) >= std::log(0.5)) {
            entry.window_concentrated = false;
            break;
          }
        }
        est.entries.push_back(entry);
      }
    }
  }
  return est;
}

// ---------------------------------------------------------------------------
// Recursion audit

namespace {

struct Tracker {
  double max_abs = 0.0;
  double max_rel = 0.0;
  int worst_tick = 0;

  // `scale` is the magnitude of the largest operand the identity was formed
  // from; cumulative sums make it much larger than either side.
  double check(double lhs, double rhs, int tick, double scale = 0.0) {
    const double abs = std::abs(lhs - rhs);
    const double rel = abs / std::max({1.0, std::abs(lhs), std::abs(rhs), std::abs(scale)});
    if (abs > max_abs) {
      max_abs = abs;
      worst_tick = tick;
    }
    max_rel = std::max(max_rel, rel);
    return abs;
  }
};

// Auxiliary quantities of one link for one scalar process: the failure
// accumulator (recursive and definitional forms) and the delay buffers,
// buffer[l - 1] holding what the receiver consumes l ticks from now.
struct LinkAux {
  double failed = 0.0;
  double failed_from_state = 0.0;
  std::vector<double> buffer;
};

std::size_t mirror_of(const LearningNodeState& receiver, int sender) {
  for (std::size_t k = 0; k < receiver.mirrors.size(); ++k) {
    if (receiver.mirrors[k].sender == sender) return k;
  }
  throw Error(ErrorCode::DimensionMismatch, "history lacks a mirror for a graph edge");
}

}  // namespace

AuditReport audit_lemma1_recursions(const DirectedGraph& graph, const ScheduleTrace& schedule,
                                    const NetworkParams& params, const LearningRun& run,
                                    int wrong, int best) {
  if (!run.history) {
    throw Error(ErrorCode::HistoryMissing, "run was not recorded in audit mode");
  }
  const LearningHistory& hist = run.history.value();
  const int horizon = schedule.horizon();
  const int n = graph.size();
  if (static_cast<int>(hist.states.size()) != horizon + 1 || schedule.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "history does not match the schedule");
  }
  const int depth = params.effective_delay_bound();
  const TauTables tau = effective_delays(schedule, graph);
  if (tau.max_delay > depth) {
    throw Error(ErrorCode::DimensionMismatch,
                "effective delay " + std::to_string(tau.max_delay) + " exceeds L_del + L_u - 1 = " +
                    std::to_string(depth));
  }

  auto log_ratio = [&](const std::vector<double>& v) { return v[wrong] - v[best]; };
  // Weighted belief log-ratio y_i log(mu_wrong / mu_best).
  auto weighted = [&](const LearningNodeState& s) { return s.y * log_ratio(s.log_mu); };

  const std::size_t edges = graph.edge_count();
  std::vector<LinkAux> psi(edges), wt(edges);
  for (std::size_t e = 0; e < edges; ++e) {
    psi[e].buffer.assign(static_cast<std::size_t>(depth), 0.0);
    wt[e].buffer.assign(static_cast<std::size_t>(depth), 0.0);
  }
  std::vector<std::size_t> slot(edges);
  for (std::size_t e = 0; e < edges; ++e) {
    const Edge link = graph.edges()[e];
    slot[e] = mirror_of(hist.states[0][link.to], link.from);
  }

  Tracker t_phi, t_belief, t_upsilon, t_buffers, t_weights;

  for (int k = 1; k <= horizon; ++k) {
    const auto& prev = hist.states[k - 1];
    const auto& next = hist.states[k];

    // Node identities.
    for (int i = 0; i < n; ++i) {
      const double awake = tau.tau_node(k, i);
      const double denom = graph.out_degree(i) + 1.0;
      const double keep = 1.0 - awake + awake / denom;

      const double phi_next = log_ratio(next[i].log_phi_mu);
      const double phi_prev = log_ratio(prev[i].log_phi_mu);
      t_phi.check(phi_next - phi_prev, awake * weighted(prev[i]) / denom, k,
                  std::max(std::abs(phi_next), std::abs(phi_prev)));

      double incoming_psi = 0.0;
      double incoming_y = 0.0;
      for (std::size_t e : graph.in_edges(i)) {
        incoming_psi += psi[e].buffer[0];
        incoming_y += wt[e].buffer[0];
      }
      double observation = 0.0;
      if (awake != 0.0) observation = log_ratio(hist.log_likelihoods[k][i]);
      // The protocol forms the incoming terms as differences of cumulative mirrors.
      double mirror_scale = 0.0;
      double mirror_scale_y = 0.0;
      for (const auto& m : next[i].mirrors) {
        mirror_scale = std::max(mirror_scale, std::abs(log_ratio(m.log_rho_mu)));
        mirror_scale_y = std::max(mirror_scale_y, m.rho_y);
      }
      t_belief.check(weighted(next[i]), keep * weighted(prev[i]) + incoming_psi + observation, k,
                     mirror_scale);
      t_weights.check(next[i].y, keep * prev[i].y + incoming_y, k, mirror_scale_y);
    }

    // Link identities; buffer level 1 at k-1 is what the receiver consumed at k.
    for (std::size_t e = 0; e < edges; ++e) {
      const Edge link = graph.edges()[e];
      const int i = link.from;
      const int j = link.to;
      const double awake = tau.tau_node(k, i);
      const double denom = graph.out_degree(i) + 1.0;
      const int delay = tau.link_delay[e][k - 1];
      const auto& rho_prev = prev[j].mirrors[slot[e]];
      const auto& rho_next = next[j].mirrors[slot[e]];

      const double rho_mu_next = log_ratio(rho_next.log_rho_mu);
      const double rho_mu_prev = log_ratio(rho_prev.log_rho_mu);
      t_buffers.check(rho_mu_next - rho_mu_prev, psi[e].buffer[0], k,
                      std::max(std::abs(rho_mu_next), std::abs(rho_mu_prev)));
      t_weights.check(rho_next.rho_y - rho_prev.rho_y, wt[e].buffer[0], k, rho_next.rho_y);

      auto advance = [&](LinkAux& aux, double pushed, double pushed_from_state) {
        const double content = aux.failed + pushed;
        for (int l = 1; l < depth; ++l) aux.buffer[l - 1] = aux.buffer[l];
        aux.buffer[depth - 1] = 0.0;
        if (delay > 0) {
          aux.buffer[delay - 1] += content;
          aux.failed = 0.0;
          aux.failed_from_state = 0.0;
        } else {
          aux.failed += pushed;
          aux.failed_from_state += pushed_from_state;
        }
      };
      advance(psi[e], awake * weighted(prev[i]) / denom,
              log_ratio(next[i].log_phi_mu) - log_ratio(prev[i].log_phi_mu));
      advance(wt[e], awake * prev[i].y / denom, next[i].phi_y - prev[i].phi_y);
      const double phi_mu_sender = log_ratio(next[i].log_phi_mu);
      t_upsilon.check(psi[e].failed, psi[e].failed_from_state, k, phi_mu_sender);
      t_weights.check(wt[e].failed, wt[e].failed_from_state, k, next[i].phi_y);

      // Sender cumulative = receiver mirror + failure accumulator + in flight.
      double in_flight_psi = 0.0;
      double in_flight_y = 0.0;
      for (int l = 0; l < depth; ++l) {
        in_flight_psi += psi[e].buffer[l];
        in_flight_y += wt[e].buffer[l];
      }
      t_buffers.check(phi_mu_sender - rho_mu_next, psi[e].failed + in_flight_psi, k,
                      std::max(std::abs(phi_mu_sender), std::abs(rho_mu_next)));
      t_weights.check(next[i].phi_y - rho_next.rho_y, wt[e].failed + in_flight_y, k, next[i].phi_y);
    }
  }

  AuditReport report;
  report.phi_increment = t_phi.max_abs;
  report.belief_ratio = t_belief.max_abs;
  report.upsilon = t_upsilon.max_abs;
  report.buffers = t_buffers.max_abs;
  report.weights = t_weights.max_abs;
  for (const Tracker* t : {&t_phi, &t_belief, &t_upsilon, &t_buffers, &t_weights}) {
    if (t->max_abs > report.max_abs) {
      report.max_abs = t->max_abs;
      report.worst_tick = t->worst_tick;
    }
    report.max_rel = std::max(report.max_rel, t->max_rel);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Synchronous oracle

ReferenceTrajectory synchronous_reference(const DirectedGraph& graph, const HypothesisModel& model,
                                          const ObservationTape& tape, int horizon) {
  const int n = graph.size();
  const int m = model.hypothesis_count();
  if (static_cast<int>(tape.per_agent.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "tape agent count differs from graph");
  }
  ReferenceTrajectory ref;
  std::vector<double> y(static_cast<std::size_t>(n), 1.0);
  std::vector<std::vector<double>> log_mu(
      static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m), -std::log(double(m))));
  // What each agent pushed to every out-neighbour on the previous tick.
  std::vector<double> pushed_y(static_cast<std::size_t>(n), 0.0);
  std::vector<std::vector<double>> pushed_mu(static_cast<std::size_t>(n),
                                             std::vector<double>(static_cast<std::size_t>(m), 0.0));
  ref.log_mu.push_back(log_mu);
  ref.y.push_back(y);

  std::vector<double> lik(static_cast<std::size_t>(m));
  for (int k = 1; k <= horizon; ++k) {
    std::vector<double> share(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) share[i] = y[i] / (graph.out_degree(i) + 1.0);

    std::vector<double> next_y(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> next_mu(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(tape.per_agent[i].size()) < k) {
        throw Error(ErrorCode::ObservationTapeExhausted, "reference tape too short");
      }
      model.log_likelihoods(i, tape.per_agent[i][k - 1], lik);
      double mixed_y = share[i];
      for (int j : graph.in_neighbors(i)) mixed_y += pushed_y[j];
      std::vector<double> l(static_cast<std::size_t>(m));
      for (int t = 0; t < m; ++t) {
        double acc = share[i] * log_mu[i][t];
        for (int j : graph.in_neighbors(i)) acc += pushed_mu[j][t];
        l[t] = (acc + lik[t]) / mixed_y;
      }
      const double z = log_sum_exp(l);
      for (double& v : l) v -= z;
      next_y[i] = mixed_y;
      next_mu[i] = std::move(l);
    }
    for (int i = 0; i < n; ++i) {
      pushed_y[i] = share[i];
      for (int t = 0; t < m; ++t) pushed_mu[i][t] = share[i] * log_mu[i][t];
    }
    y = std::move(next_y);
    log_mu = std::move(next_mu);
    ref.log_mu.push_back(log_mu);
    ref.y.push_back(y);
  }
  return ref;
}

}  // namespace pushlearn
