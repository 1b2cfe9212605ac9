#include "pushlearn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "pushlearn/error.hpp"

namespace pushlearn {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double lower_tail(double z) { return 0.5 * std::erfc(-z / kSqrt2); }
double upper_tail(double z) { return 0.5 * std::erfc(z / kSqrt2); }

// log(Phi(b) - Phi(a)) evaluated on whichever side keeps precision.
double log_normal_mass(double a, double b) {
  if (a > 0.0) return std::log(upper_tail(a) - upper_tail(b));
  return std::log(lower_tail(b) - lower_tail(a));
}

double tn_log_density(const TruncatedNormal& p, double log_z, double x) {
  const double sd = std::sqrt(p.variance);
  const double z = (x - p.mean) / sd;
  return -0.5 * z * z - kLogSqrt2Pi - std::log(sd) - log_z;
}

}  // namespace

Distribution::Distribution(std::variant<Categorical, TruncatedNormal> params)
    : params_(std::move(params)) {
  if (const auto* tn = std::get_if<TruncatedNormal>(&params_)) {
    const double sd = std::sqrt(tn->variance);
    log_z_ = log_normal_mass((tn->lower - tn->mean) / sd, (tn->upper - tn->mean) / sd);
  }
}

Distribution Distribution::categorical(std::vector<double> support, std::vector<double> probs) {
  if (support.empty() || support.size() != probs.size()) {
    throw Error(ErrorCode::InvalidDistribution,
                "categorical needs matching, non-empty support and probability lists");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::InvalidDistribution, "categorical probability must be >= 0");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidDistribution,
                "categorical probabilities sum to " + std::to_string(total));
  }
  std::vector<double> sorted = support;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::InvalidDistribution, "categorical support values must be distinct");
  }
  return Distribution(Categorical{std::move(support), std::move(probs)});
}

Distribution Distribution::truncated_normal(double mean, double variance, double lower,
                                            double upper) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw Error(ErrorCode::InvalidDistribution, "truncated normal variance must be > 0");
  }
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper) ||
      !std::isfinite(mean)) {
    throw Error(ErrorCode::InvalidDistribution, "truncated normal needs finite lower < upper");
  }
  Distribution d(TruncatedNormal{mean, variance, lower, upper});
  if (!std::isfinite(d.log_z_)) {
    throw Error(ErrorCode::InvalidDistribution, "truncation interval carries no mass");
  }
  return d;
}

bool Distribution::in_support(double x) const {
  if (const auto* c = std::get_if<Categorical>(&params_)) {
    return std::find(c->support.begin(), c->support.end(), x) != c->support.end();
  }
  const auto& tn = std::get<TruncatedNormal>(params_);
  return x >= tn.lower && x <= tn.upper;
}

double Distribution::density(double x) const {
  if (const auto* c = std::get_if<Categorical>(&params_)) {
    auto it = std::find(c->support.begin(), c->support.end(), x);
    if (it == c->support.end()) return 0.0;
    return c->probs[static_cast<std::size_t>(it - c->support.begin())];
  }
  if (!in_support(x)) return 0.0;
  return std::exp(tn_log_density(std::get<TruncatedNormal>(params_), log_z_, x));
}

double Distribution::log_density(double x) const {
  if (is_categorical()) return std::log(density(x));
  if (!in_support(x)) return -std::numeric_limits<double>::infinity();
  return tn_log_density(std::get<TruncatedNormal>(params_), log_z_, x);
}

double Distribution::max_density() const {
  if (const auto* c = std::get_if<Categorical>(&params_)) {
    return *std::max_element(c->probs.begin(), c->probs.end());
  }
  const auto& tn = std::get<TruncatedNormal>(params_);
  return density(std::clamp(tn.mean, tn.lower, tn.upper));
}

double Distribution::mean() const {
  if (const auto* c = std::get_if<Categorical>(&params_)) {
    return std::inner_product(c->support.begin(), c->support.end(), c->probs.begin(), 0.0);
  }
  const auto& tn = std::get<TruncatedNormal>(params_);
  const double sd = std::sqrt(tn.variance);
  const double a = (tn.lower - tn.mean) / sd;
  const double b = (tn.upper - tn.mean) / sd;
  const double phi_a = std::exp(-0.5 * a * a - kLogSqrt2Pi - log_z_);
  const double phi_b = std::exp(-0.5 * b * b - kLogSqrt2Pi - log_z_);
  return tn.mean + sd * (phi_a - phi_b);
}

double Distribution::sample(RngStream& rng) const {
  const double u = rng.uniform01();
  if (const auto* c = std::get_if<Categorical>(&params_)) {
    double acc = 0.0;
    for (std::size_t k = 0; k < c->probs.size(); ++k) {
      acc += c->probs[k];
      if (u < acc) return c->support[k];
    }
    // Rounding left u above the accumulated total: last positive-mass value.
    for (std::size_t k = c->probs.size(); k-- > 0;) {
      if (c->probs[k] > 0.0) return c->support[k];
    }
    return c->support.back();
  }
  const auto& tn = std::get<TruncatedNormal>(params_);
  const double sd = std::sqrt(tn.variance);
  const double a = (tn.lower - tn.mean) / sd;
  const double b = (tn.upper - tn.mean) / sd;
  const double lo = lower_tail(a);
  const double hi = lower_tail(b);
  const double p = lo + u * (hi - lo);
  double z;
  if (p <= 0.5) {
    z = -kSqrt2 * boost::math::erfc_inv(2.0 * p);
  } else {
    const double q = upper_tail(a) - u * (upper_tail(a) - upper_tail(b));
    z = kSqrt2 * boost::math::erfc_inv(2.0 * q);
  }
  return std::clamp(tn.mean + sd * z, tn.lower, tn.upper);
}

bool operator==(const Distribution& a, const Distribution& b) {
  if (a.is_categorical() != b.is_categorical()) return false;
  if (a.is_categorical()) {
    const auto& x = a.as_categorical();
    const auto& y = b.as_categorical();
    return x.support == y.support && x.probs == y.probs;
  }
  const auto& x = a.as_truncated_normal();
  const auto& y = b.as_truncated_normal();
  return x.mean == y.mean && x.variance == y.variance && x.lower == y.lower &&
         x.upper == y.upper;
}

double kl_divergence(const Distribution& p, const Distribution& q, double abs_tol) {
  if (p.is_categorical() != q.is_categorical()) {
    throw Error(ErrorCode::SupportMismatch, "cannot compare categorical with continuous");
  }
  if (p.is_categorical()) {
    const auto& pc = p.as_categorical();
    const auto& qc = q.as_categorical();
    if (pc.support.size() != qc.support.size()) {
      throw Error(ErrorCode::SupportMismatch, "categorical supports differ in size");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < pc.support.size(); ++k) {
      if (!q.in_support(pc.support[k])) {
        throw Error(ErrorCode::SupportMismatch, "categorical supports differ");
      }
      const double pk = pc.probs[k];
      if (pk == 0.0) continue;
      const double qk = q.density(pc.support[k]);
      if (qk == 0.0) {
        throw Error(ErrorCode::SupportMismatch, "q is zero where p has mass");
      }
      total += pk * (std::log(pk) - std::log(qk));
    }
    return std::max(total, 0.0);
  }

  const auto& pt = p.as_truncated_normal();
  const auto& qt = q.as_truncated_normal();
  if (qt.lower > pt.lower || qt.upper < pt.upper) {
    throw Error(ErrorCode::SupportMismatch, "q does not cover the support of p");
  }
  auto integrand = [&](double x) {
    const double lp = p.log_density(x);
    return std::exp(lp) * (lp - q.log_density(x));
  };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, pt.lower, pt.upper, 20, 1e-13, &error);
  if (!(error <= abs_tol) || !std::isfinite(value)) {
    throw Error(ErrorCode::QuadratureFailure,
                "error estimate " + std::to_string(error) + " above tolerance");
  }
  return std::max(value, 0.0);
}

HypothesisModel::HypothesisModel(std::vector<Agent> agents, double floor)
    : agents_(std::move(agents)), floor_(floor) {
  if (agents_.empty()) throw Error(ErrorCode::InvalidModel, "model has no agents");
  if (!(floor_ > 0.0)) throw Error(ErrorCode::InvalidModel, "density floor must be > 0");
  m_ = static_cast<int>(agents_.front().likelihoods.size());
  if (m_ < 1) throw Error(ErrorCode::InvalidModel, "need at least one hypothesis");
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const Agent& a = agents_[i];
    if (static_cast<int>(a.likelihoods.size()) != m_) {
      throw Error(ErrorCode::InvalidModel,
                  "agent " + std::to_string(i) + " has a different hypothesis count");
    }
    for (const Distribution& lik : a.likelihoods) {
      if (lik.is_categorical() != a.truth.is_categorical()) {
        throw Error(ErrorCode::SupportMismatch,
                    "agent " + std::to_string(i) + " mixes categorical and continuous laws");
      }
      if (lik.is_categorical()) {
        const auto& tc = a.truth.as_categorical();
        for (std::size_t k = 0; k < tc.support.size(); ++k) {
          if (tc.probs[k] > 0.0 && !(lik.density(tc.support[k]) > 0.0)) {
            throw Error(ErrorCode::SupportMismatch,
                        "agent " + std::to_string(i) + " hypothesis misses a true outcome");
          }
        }
      } else {
        const auto& t = a.truth.as_truncated_normal();
        const auto& h = lik.as_truncated_normal();
        if (h.lower > t.lower || h.upper < t.upper) {
          throw Error(ErrorCode::SupportMismatch,
                      "agent " + std::to_string(i) + " hypothesis support too narrow");
        }
      }
    }
  }
}

double HypothesisModel::log_likelihood(int agent_index, int theta, double x) const {
  const Distribution& lik = likelihood(agent_index, theta);
  if (!lik.in_support(x)) {
    throw Error(ErrorCode::OutOfSupport, "observation " + std::to_string(x) +
                                             " outside support of agent " +
                                             std::to_string(agent_index));
  }
  return std::max(lik.log_density(x), std::log(floor_));
}

void HypothesisModel::log_likelihoods(int agent_index, double x, std::span<double> out) const {
  for (int t = 0; t < m_; ++t) out[static_cast<std::size_t>(t)] = log_likelihood(agent_index, t, x);
}

HypothesisModel HypothesisModel::permuted_hypotheses(std::span<const int> perm) const {
  std::vector<Agent> agents;
  for (const Agent& a : agents_) {
    Agent b{a.truth, {}};
    for (int t : perm) b.likelihoods.push_back(a.likelihoods.at(static_cast<std::size_t>(t)));
    agents.push_back(std::move(b));
  }
  return HypothesisModel(std::move(agents), floor_);
}

bool Objective::is_optimal(int theta) const {
  return std::find(optimal.begin(), optimal.end(), theta) != optimal.end();
}

Objective objective(const HypothesisModel& model, double tie_tol) {
  const int n = model.agent_count();
  const int m = model.hypothesis_count();
  Objective obj;
  obj.values.assign(static_cast<std::size_t>(m), 0.0);
  obj.local.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m)));
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < m; ++t) {
      const double d = kl_divergence(model.truth(i), model.likelihood(i, t));
      obj.local[i][t] = d;
      obj.values[t] += d;
    }
  }
  obj.optimum = *std::min_element(obj.values.begin(), obj.values.end());
  for (int t = 0; t < m; ++t) {
    if (obj.values[t] <= obj.optimum + tie_tol) {
      obj.optimal.push_back(t);
    } else {
      obj.gap = std::min(obj.gap, obj.values[t] - obj.optimum);
    }
  }
  return obj;
}

}  // namespace pushlearn
