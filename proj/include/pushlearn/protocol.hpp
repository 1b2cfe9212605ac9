#pragma once

#include <span>
#include <vector>

#include "pushlearn/graph.hpp"
#include "pushlearn/stats.hpp"

namespace pushlearn {

/// What a node knows about its place in the graph.
struct NodeContext {
  int out_degree = 0;
  std::vector<int> in_neighbors;  // sender of each in-edge, in mirror order

  static NodeContext of(const DirectedGraph& graph, int node);
};

/// Receiver-side copy of the newest cumulative sums applied from one in-edge.
struct LearningMirror {
  int sender = 0;
  double rho_y = 0.0;
  std::vector<double> log_rho_mu;
  int kappa = 0;
};

/// Per-agent state of the robust asynchronous learning rule. Every
/// multiplicative quantity (belief, cumulative geometric mass, mirrors) is
/// stored as its logarithm.
struct LearningNodeState {
  double y = 1.0;
  double phi_y = 0.0;
  std::vector<double> log_phi_mu;
  std::vector<double> log_mu;
  std::vector<LearningMirror> mirrors;
  int kappa = 0;

  int hypothesis_count() const { return static_cast<int>(log_mu.size()); }
};

/// Cumulative snapshot broadcast after the sender's local accumulation.
struct LearningMessage {
  int sender = 0;
  double phi_y = 0.0;
  std::vector<double> log_phi_mu;
  int kappa = 0;
};

/// Test hooks for fault injection; never set in normal runs.
struct StepFaults {
  bool skip_rho_commit = false;
};

struct LearningStepResult {
  LearningNodeState state;
  LearningMessage broadcast;
  int stale_dropped = 0;
};

/// One wake of node `self`: accumulate and broadcast, stage the freshest
/// mirrors from the inbox, then mix and apply the local likelihoods.
/// `log_likelihoods[theta]` is log P_theta(x) of this wake's observation.
/// Throws Error{StaleTick, NonpositiveWeight, UnknownSender, SizeMismatch}.
LearningStepResult learning_wake_step(const LearningNodeState& state, int self,
                                      const NodeContext& context,
                                      std::span<const LearningMessage> inbox,
                                      std::span<const double> log_likelihoods, int tick,
                                      StepFaults faults = {});

/// Convenience overload drawing the likelihood vector from the model.
LearningStepResult learning_wake_step(const LearningNodeState& state, int self,
                                      const NodeContext& context,
                                      std::span<const LearningMessage> inbox,
                                      const HypothesisModel& model, double observation, int tick,
                                      StepFaults faults = {});

/// Uniform beliefs, unit weights, zero cumulative sums and mirrors.
/// Throws Error{SizeMismatch}.
std::vector<LearningNodeState> init_learning_network(const DirectedGraph& graph,
                                                     const HypothesisModel& model);

/// log sum exp over v; -inf for an empty span.
double log_sum_exp(std::span<const double> v);

struct RapsMirror {
  int sender = 0;
  double rho_x = 0.0;
  double rho_y = 0.0;
  int kappa = 0;
};

/// Robust asynchronous push-sum averaging state.
struct RapsNodeState {
  double x = 0.0;
  double y = 1.0;
  double phi_x = 0.0;
  double phi_y = 0.0;
  double z = 0.0;
  std::vector<RapsMirror> mirrors;
  int kappa = 0;
};

struct RapsMessage {
  int sender = 0;
  double phi_x = 0.0;
  double phi_y = 0.0;
  int kappa = 0;
};

struct RapsStepResult {
  RapsNodeState state;
  RapsMessage broadcast;
  int stale_dropped = 0;
};

RapsStepResult raps_wake_step(const RapsNodeState& state, int self, const NodeContext& context,
                              std::span<const RapsMessage> inbox, int tick,
                              StepFaults faults = {});

/// x_i(0) from `initial`, y = 1, z = x. Throws Error{SizeMismatch}.
std::vector<RapsNodeState> init_raps_network(const DirectedGraph& graph,
                                             std::span<const double> initial);

}  // namespace pushlearn
