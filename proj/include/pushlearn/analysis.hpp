#pragma once

#include <span>
#include <vector>

#include "pushlearn/engine.hpp"
#include "pushlearn/graph.hpp"
#include "pushlearn/schedule.hpp"
#include "pushlearn/stats.hpp"

namespace pushlearn {

/// Consensus-rate constants of robust asynchronous push-sum:
///   alpha = n^{-n L_s},  delta = 1 / (1 - n alpha^6),
///   lambda = (1 - n alpha^6)^{1 / (2 n L_s)}.
/// n alpha^6 underflows double precision for all but the smallest networks,
/// so everything is held in log space; 1 - lambda is kept as
/// log(-log lambda).
struct Theorem2Constants {
  int n = 0;
  int success_interval = 0;        // L_s
  double log_alpha = 0.0;
  double log_n_alpha6 = 0.0;       // log(n alpha^6)
  double log_delta = 0.0;          // -log1p(-n alpha^6)
  double log_neg_log_lambda = 0.0; // log(-log lambda)

  double alpha() const;
  double delta() const;
  double lambda() const;
  /// 1 - lambda without cancellation.
  double one_minus_lambda() const;
  /// log(delta lambda^k ||x(0)||_1).
  double log_bound(double k, double l1_norm) const;
};

/// Throws Error{DegenerateBound} if n alpha^6 >= 1, Error{InvalidParams} on
/// non-positive inputs.
Theorem2Constants theorem2_constants(int n, int max_delay, int max_sleep, int max_failures);

struct RapsDecayReport {
  double mean = 0.0;
  double l1_norm = 0.0;
  bool bound_holds = true;
  int first_violation_tick = -1;
  double max_error = 0.0;         // max_i,k |z_i(k) - mean|
  double final_error = 0.0;       // max_i |z_i(K) - mean|
  double max_log_slack = 0.0;     // max over points of log(error) - log(bound)
  double empirical_rate = 0.0;    // exp(slope) of the least-squares fit of log error
  int fitted_points = 0;
};

RapsDecayReport check_raps_decay(const RapsTrace& trace, const Theorem2Constants& constants);

struct RateEntry {
  int agent = 0;
  int wrong = 0;  // theta_v outside Theta*
  int best = 0;   // theta_w inside Theta*
  double slope = 0.0;
  /// -(1/n) sum_i D_KL(P^i_best || P^i_wrong)
  double predicted = 0.0;
  /// mu_wrong < 0.5 throughout the window
  bool window_concentrated = false;
};

struct RateEstimate {
  std::vector<RateEntry> entries;
  /// -(1/n) min_{theta not in Theta*} (F(theta) - F(theta*))
  double bound = 0.0;
  int window_start = 0;
  int window_end = 0;

  double mean_slope() const;
};

/// Endpoint-differenced slope of log(mu_wrong / mu_best) over the trailing
/// `window_fraction` of the run, for every agent and (wrong, best) pair.
/// Throws Error{WindowTooShort}.
RateEstimate estimate_rate(const BeliefTrace& trace, const HypothesisModel& model,
                           const Objective& objective, double window_fraction);

/// Largest residual of each family of audited identities.
struct AuditReport {
  double phi_increment = 0.0;   // log phi^mu ratio increment
  double belief_ratio = 0.0;    // weighted belief log-ratio update
  double upsilon = 0.0;         // failure-buffer recursion vs definition
  double buffers = 0.0;         // delay buffers: link conservation and consumption
  double weights = 0.0;         // the same identities for the push-sum weights
  double max_abs = 0.0;
  double max_rel = 0.0;         // residual / max(1, |lhs|, |rhs|, largest operand)
  int worst_tick = 0;
};

/// Reconstructs the failure accumulators and per-delay buffers from the
/// trace's processing delays and checks, tick by tick, that the recorded
/// protocol states obey the linear recursions of the weighted belief
/// log-ratios for the pair (wrong, best). Buffer depth is
/// params.effective_delay_bound(). Throws Error{HistoryMissing,
/// DimensionMismatch}.
AuditReport audit_lemma1_recursions(const DirectedGraph& graph, const ScheduleTrace& schedule,
                                    const NetworkParams& params, const LearningRun& run,
                                    int wrong, int best);

/// log-beliefs [tick][agent][theta] and weights [tick][agent] of the
/// loss-free synchronous push-sum learning recursion with one-tick links.
struct ReferenceTrajectory {
  std::vector<std::vector<std::vector<double>>> log_mu;
  std::vector<std::vector<double>> y;
};

/// Oracle for synchronous runs: every agent wakes every tick, and at tick k
/// mixes its own share y_i/(d_i+1) with the shares its in-neighbours pushed
/// at tick k-1, then applies the tick's observation from the tape.
ReferenceTrajectory synchronous_reference(const DirectedGraph& graph, const HypothesisModel& model,
                                          const ObservationTape& tape, int horizon);

}  // namespace pushlearn
