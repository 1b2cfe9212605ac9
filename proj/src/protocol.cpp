#include "pushlearn/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pushlearn/error.hpp"

namespace pushlearn {
namespace {

template <typename Mirror>
std::size_t mirror_slot(const std::vector<Mirror>& mirrors, int sender, int self) {
  for (std::size_t k = 0; k < mirrors.size(); ++k) {
    if (mirrors[k].sender == sender) return k;
  }
  throw Error(ErrorCode::UnknownSender, "node " + std::to_string(self) +
                                            " received a message from non-neighbor " +
                                            std::to_string(sender));
}

void check_tick(int tick, int kappa, int self) {
  if (tick <= kappa) {
    throw Error(ErrorCode::StaleTick, "node " + std::to_string(self) + " woke at tick " +
                                          std::to_string(tick) + " after processing tick " +
                                          std::to_string(kappa));
  }
}

void check_weight(double y_hat, int self, int tick) {
  if (!(y_hat > 0.0)) {
    throw Error(ErrorCode::NonpositiveWeight, "node " + std::to_string(self) + " at tick " +
                                                  std::to_string(tick) + " reached weight " +
                                                  std::to_string(y_hat));
  }
}

// Adds `share` to the cumulative sum `phi` and returns what the node keeps:
// `value` minus the mass actually pushed onto its out-links. The pushed
// amount is the realized increment of phi, so rounding in the large
// cumulative sum moves no mass in or out of the network.
double push_cumulative(double& phi, double value, double share, int out_degree) {
  const double before = phi;
  phi += share;
  return value - static_cast<double>(out_degree) * (phi - before);
}

}  // namespace

NodeContext NodeContext::of(const DirectedGraph& graph, int node) {
  NodeContext ctx;
  ctx.out_degree = graph.out_degree(node);
  const auto in = graph.in_neighbors(node);
  ctx.in_neighbors.assign(in.begin(), in.end());
  return ctx;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - top);
  return top + std::log(acc);
}

LearningStepResult learning_wake_step(const LearningNodeState& state, int self,
                                      const NodeContext& context,
                                      std::span<const LearningMessage> inbox,
                                      std::span<const double> log_likelihoods, int tick,
                                      StepFaults faults) {
  check_tick(tick, state.kappa, self);
  const std::size_t m = state.log_mu.size();
  if (log_likelihoods.size() != m || state.log_phi_mu.size() != m) {
    throw Error(ErrorCode::SizeMismatch, "likelihood vector does not match hypothesis count");
  }

  LearningStepResult out;
  LearningNodeState& s = out.state;
  s = state;

  // 1. Local accumulation and broadcast.
  const double share = s.y / static_cast<double>(context.out_degree + 1);
  s.kappa = tick;
  const double retained = push_cumulative(s.phi_y, s.y, share, context.out_degree);
  for (std::size_t t = 0; t < m; ++t) s.log_phi_mu[t] += share * s.log_mu[t];
  out.broadcast = LearningMessage{self, s.phi_y, s.log_phi_mu, tick};

  // 2. Stage the freshest snapshot per in-edge; untouched edges keep rho* = rho.
  std::vector<double> staged_y(s.mirrors.size());
  std::vector<std::vector<double>> staged_mu(s.mirrors.size());
  for (std::size_t k = 0; k < s.mirrors.size(); ++k) {
    staged_y[k] = s.mirrors[k].rho_y;
    staged_mu[k] = s.mirrors[k].log_rho_mu;
  }
  for (const LearningMessage& msg : inbox) {
    const std::size_t k = mirror_slot(s.mirrors, msg.sender, self);
    if (msg.kappa > s.mirrors[k].kappa) {
      if (msg.log_phi_mu.size() != m) {
        throw Error(ErrorCode::SizeMismatch, "message hypothesis count differs");
      }
      staged_y[k] = msg.phi_y;
      staged_mu[k] = msg.log_phi_mu;
      s.mirrors[k].kappa = msg.kappa;
    } else {
      ++out.stale_dropped;
    }
  }

  // 3. Mix and apply the likelihood.
  double y_hat = retained;
  for (std::size_t k = 0; k < s.mirrors.size(); ++k) y_hat += staged_y[k] - s.mirrors[k].rho_y;
  check_weight(y_hat, self, tick);

  std::vector<double> unnormalized(m);
  for (std::size_t t = 0; t < m; ++t) {
    double acc = share * s.log_mu[t];
    for (std::size_t k = 0; k < s.mirrors.size(); ++k) {
      acc += staged_mu[k][t] - s.mirrors[k].log_rho_mu[t];
    }
    acc += log_likelihoods[t];
    unnormalized[t] = acc / y_hat;
  }
  const double log_z = log_sum_exp(unnormalized);
  for (std::size_t t = 0; t < m; ++t) s.log_mu[t] = unnormalized[t] - log_z;
  s.y = y_hat;
  if (!faults.skip_rho_commit) {
    for (std::size_t k = 0; k < s.mirrors.size(); ++k) {
      s.mirrors[k].rho_y = staged_y[k];
      s.mirrors[k].log_rho_mu = std::move(staged_mu[k]);
    }
  }
  return out;
}

LearningStepResult learning_wake_step(const LearningNodeState& state, int self,
                                      const NodeContext& context,
                                      std::span<const LearningMessage> inbox,
                                      const HypothesisModel& model, double observation, int tick,
                                      StepFaults faults) {
  std::vector<double> lik(static_cast<std::size_t>(model.hypothesis_count()));
  model.log_likelihoods(self, observation, lik);
  return learning_wake_step(state, self, context, inbox, lik, tick, faults);
}

std::vector<LearningNodeState> init_learning_network(const DirectedGraph& graph,
                                                     const HypothesisModel& model) {
  if (graph.size() != model.agent_count()) {
    throw Error(ErrorCode::SizeMismatch, "graph has " + std::to_string(graph.size()) +
                                             " nodes, model has " +
                                             std::to_string(model.agent_count()) + " agents");
  }
  const auto m = static_cast<std::size_t>(model.hypothesis_count());
  const double uniform = -std::log(static_cast<double>(m));
  std::vector<LearningNodeState> states(static_cast<std::size_t>(graph.size()));
  for (int i = 0; i < graph.size(); ++i) {
    LearningNodeState& s = states[i];
    s.log_phi_mu.assign(m, 0.0);
    s.log_mu.assign(m, uniform);
    for (int j : graph.in_neighbors(i)) {
      s.mirrors.push_back(LearningMirror{j, 0.0, std::vector<double>(m, 0.0), 0});
    }
  }
  return states;
}

RapsStepResult raps_wake_step(const RapsNodeState& state, int self, const NodeContext& context,
                              std::span<const RapsMessage> inbox, int tick, StepFaults faults) {
  check_tick(tick, state.kappa, self);
  RapsStepResult out;
  RapsNodeState& s = out.state;
  s = state;

  const double denom = static_cast<double>(context.out_degree + 1);
  s.kappa = tick;
  const double keep_x = push_cumulative(s.phi_x, s.x, s.x / denom, context.out_degree);
  const double keep_y = push_cumulative(s.phi_y, s.y, s.y / denom, context.out_degree);
  out.broadcast = RapsMessage{self, s.phi_x, s.phi_y, tick};

  std::vector<double> staged_x(s.mirrors.size());
  std::vector<double> staged_y(s.mirrors.size());
  for (std::size_t k = 0; k < s.mirrors.size(); ++k) {
    staged_x[k] = s.mirrors[k].rho_x;
    staged_y[k] = s.mirrors[k].rho_y;
  }
  for (const RapsMessage& msg : inbox) {
    const std::size_t k = mirror_slot(s.mirrors, msg.sender, self);
    if (msg.kappa > s.mirrors[k].kappa) {
      staged_x[k] = msg.phi_x;
      staged_y[k] = msg.phi_y;
      s.mirrors[k].kappa = msg.kappa;
    } else {
      ++out.stale_dropped;
    }
  }

  double y_hat = keep_y;
  double x_hat = keep_x;
  for (std::size_t k = 0; k < s.mirrors.size(); ++k) {
    y_hat += staged_y[k] - s.mirrors[k].rho_y;
    x_hat += staged_x[k] - s.mirrors[k].rho_x;
  }
  check_weight(y_hat, self, tick);
  s.x = x_hat;
  s.y = y_hat;
  s.z = x_hat / y_hat;
  if (!faults.skip_rho_commit) {
    for (std::size_t k = 0; k < s.mirrors.size(); ++k) {
      s.mirrors[k].rho_x = staged_x[k];
      s.mirrors[k].rho_y = staged_y[k];
    }
  }
  return out;
}

std::vector<RapsNodeState> init_raps_network(const DirectedGraph& graph,
                                             std::span<const double> initial) {
  if (static_cast<int>(initial.size()) != graph.size()) {
    throw Error(ErrorCode::SizeMismatch, "initial value count differs from node count");
  }
  std::vector<RapsNodeState> states(static_cast<std::size_t>(graph.size()));
  for (int i = 0; i < graph.size(); ++i) {
    RapsNodeState& s = states[i];
    s.x = initial[i];
    s.z = initial[i];
    for (int j : graph.in_neighbors(i)) s.mirrors.push_back(RapsMirror{j, 0.0, 0.0, 0});
  }
  return states;
}

}  // namespace pushlearn
