#pragma once

#include <doctest.h>

#include <cmath>
#include <vector>

#include "pushlearn/error.hpp"
#include "pushlearn/stats.hpp"

namespace testing {

template <typename F>
pushlearn::ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const pushlearn::Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return pushlearn::ErrorCode::ConfigError;
}

inline pushlearn::Distribution coin(double p_one) {
  return pushlearn::Distribution::categorical({0.0, 1.0}, {1.0 - p_one, p_one});
}

/// Agent observing a coin with P(1) = truth, one hypothesis per entry of `hyps`.
inline pushlearn::HypothesisModel::Agent coin_agent(double truth, std::vector<double> hyps) {
  pushlearn::HypothesisModel::Agent a{coin(truth), {}};
  for (double h : hyps) a.likelihoods.push_back(coin(h));
  return a;
}

inline double coin_kl(double p, double q) {
  return p * std::log(p / q) + (1 - p) * std::log((1 - p) / (1 - q));
}

// Standard normal pieces written out independently of the library.
inline double std_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); }
inline double std_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Composite Simpson rule with `panels` (even) subintervals.
template <typename F>
double simpson(F&& f, double a, double b, int panels = 200000) {
  const double h = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int k = 1; k < panels; ++k) acc += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace testing
