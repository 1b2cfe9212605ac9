#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "pushlearn/rng.hpp"

namespace pushlearn {

/// Finite-support distribution. `support` values are distinct.
struct Categorical {
  std::vector<double> support;
  std::vector<double> probs;
};

/// Normal(mean, variance) restricted to [lower, upper] and renormalized.
struct TruncatedNormal {
  double mean = 0.0;
  double variance = 1.0;
  double lower = -10.0;
  double upper = 20.0;
};

class Distribution {
 public:
  /// Throws Error{InvalidDistribution}.
  static Distribution categorical(std::vector<double> support, std::vector<double> probs);
  static Distribution truncated_normal(double mean, double variance, double lower = -10.0,
                                       double upper = 20.0);

  bool is_categorical() const noexcept { return std::holds_alternative<Categorical>(params_); }
  const Categorical& as_categorical() const { return std::get<Categorical>(params_); }
  const TruncatedNormal& as_truncated_normal() const { return std::get<TruncatedNormal>(params_); }

  bool in_support(double x) const;
  /// Density (continuous) or probability mass (categorical); zero off support.
  double density(double x) const;
  double log_density(double x) const;
  /// log of the truncation mass Z = Phi(beta) - Phi(alpha); 0 for categorical.
  double log_normalizer() const noexcept { return log_z_; }
  /// Largest density value attained on the support.
  double max_density() const;
  double mean() const;

  /// Categorical: inverse-CDF over the support order. Truncated normal:
  /// inverse-CDF on the truncated interval.
  double sample(RngStream& rng) const;

  friend bool operator==(const Distribution& a, const Distribution& b);

 private:
  explicit Distribution(std::variant<Categorical, TruncatedNormal> params);

  std::variant<Categorical, TruncatedNormal> params_;
  double log_z_ = 0.0;
};

/// D_KL(p || q) in nats. Categorical pairs must share the same support set.
/// Truncated normal pairs are integrated over p's support with adaptive
/// Gauss-Kronrod quadrature to absolute tolerance `abs_tol`.
/// Throws Error{SupportMismatch, QuadratureFailure}.
double kl_divergence(const Distribution& p, const Distribution& q, double abs_tol = 1e-8);

/// Per-agent likelihood families over a shared hypothesis set.
class HypothesisModel {
 public:
  struct Agent {
    Distribution truth;
    std::vector<Distribution> likelihoods;  // one per hypothesis
  };

  /// Throws Error{InvalidModel, SupportMismatch}.
  HypothesisModel(std::vector<Agent> agents, double floor = 1e-8);

  int agent_count() const noexcept { return static_cast<int>(agents_.size()); }
  int hypothesis_count() const noexcept { return m_; }
  double floor() const noexcept { return floor_; }
  const Agent& agent(int i) const { return agents_.at(static_cast<std::size_t>(i)); }
  const Distribution& truth(int i) const { return agent(i).truth; }
  const Distribution& likelihood(int i, int theta) const {
    return agent(i).likelihoods.at(static_cast<std::size_t>(theta));
  }

  /// log(max(P_theta^i(x), floor)). Throws Error{OutOfSupport}.
  double log_likelihood(int agent, int theta, double x) const;
  /// All m log-likelihoods at x, written into `out`.
  void log_likelihoods(int agent, double x, std::span<double> out) const;

  double sample(int agent, RngStream& rng) const { return truth(agent).sample(rng); }

  /// Same model with hypotheses reordered: new theta t is old theta perm[t].
  HypothesisModel permuted_hypotheses(std::span<const int> perm) const;

 private:
  std::vector<Agent> agents_;
  int m_ = 0;
  double floor_ = 1e-8;
};

struct Objective {
  std::vector<double> values;                 // F(theta)
  std::vector<std::vector<double>> local;     // local[i][theta] = D_KL(P^i || P_theta^i)
  std::vector<int> optimal;                   // Theta*
  double optimum = 0.0;                       // F(theta*)
  /// min over theta outside Theta* of F(theta) - F(theta*); +inf if every
  /// hypothesis is optimal.
  double gap = std::numeric_limits<double>::infinity();

  bool is_optimal(int theta) const;
};

/// F(theta) = sum_i D_KL(P^i || P_theta^i); Theta* = {F <= min F + tie_tol}.
Objective objective(const HypothesisModel& model, double tie_tol = 1e-9);

}  // namespace pushlearn
