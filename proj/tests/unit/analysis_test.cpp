#include "support.hpp"

#include "pushlearn/analysis.hpp"
#include "pushlearn/experiment.hpp"

using namespace pushlearn;
using testing::code_of;

namespace {

ObservationTape stream_tape(const HypothesisModel& model, std::uint64_t seed, int length) {
  ObservationTape tape;
  for (int i = 0; i < model.agent_count(); ++i) {
    RngStream rng(seed, StreamKind::Observation, static_cast<std::uint64_t>(i));
    std::vector<double> obs;
    for (int k = 0; k < length; ++k) obs.push_back(model.sample(i, rng));
    tape.per_agent.push_back(std::move(obs));
  }
  return tape;
}

HypothesisModel two_coins() {
  return HypothesisModel({testing::coin_agent(0.7, {0.4, 0.7}), testing::coin_agent(0.3, {0.5, 0.3})});
}

double max_reference_gap(const LearningRun& run, const ReferenceTrajectory& ref) {
  double worst = 0.0;
  for (int k = 0; k <= run.trace.horizon(); ++k) {
    for (int i = 0; i < run.trace.agents(); ++i) {
      for (int t = 0; t < run.trace.hypotheses(); ++t) {
        worst = std::max(worst, std::abs(run.trace.belief(k, i, t) - std::exp(ref.log_mu[k][i][t])));
      }
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("consensus constants for the smallest network") {
  const auto c = theorem2_constants(2, 1, 1, 1);
  CHECK(c.success_interval == 3);
  CHECK(c.alpha() == doctest::Approx(0.015625).epsilon(1e-14));
  const double n_alpha6 = 2 * std::pow(2.0, -36);
  CHECK(std::exp(c.log_n_alpha6) == doctest::Approx(n_alpha6).epsilon(1e-13));
  CHECK(std::exp(c.log_n_alpha6) == doctest::Approx(2.91e-11).epsilon(1e-3));
  CHECK(c.delta() - 1 == doctest::Approx(n_alpha6).epsilon(1e-4));
  const double one_minus_lambda = -std::expm1(std::log1p(-n_alpha6) / 12);
  CHECK(c.one_minus_lambda() == doctest::Approx(one_minus_lambda).epsilon(1e-12));
  CHECK(c.one_minus_lambda() == doctest::Approx(2.42e-12).epsilon(3e-3));
}

TEST_CASE("consensus constants for the experiment networks") {
  const auto c = theorem2_constants(4, 3, 5, 5);
  CHECK(c.success_interval == 37);
  CHECK(c.log_alpha == doctest::Approx(-4 * 37 * std::log(4.0)));
  CHECK(c.log_n_alpha6 == doctest::Approx(std::log(4.0) + 6 * c.log_alpha));
  CHECK(c.log_neg_log_lambda == doctest::Approx(c.log_n_alpha6 - std::log(2.0 * 4 * 37)));
  CHECK(code_of([] { theorem2_constants(1, 1, 1, 1); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { theorem2_constants(3, 0, 1, 1); }) == ErrorCode::InvalidParams);
}

TEST_CASE("lambda lies in (0,1) and grows with every argument") {
  for (int n = 2; n <= 10; ++n) {
    for (int ld = 1; ld <= 10; ++ld) {
      for (int lu = 1; lu <= 10; ++lu) {
        for (int lf = 1; lf <= 10; ++lf) {
          const auto c = theorem2_constants(n, ld, lu, lf);
          // -log(lambda) > 0 exactly when this is finite.
          REQUIRE(std::isfinite(c.log_neg_log_lambda));
          CHECK(c.log_alpha < 0);
          CHECK(c.log_delta >= 0);
          if (n < 10) CHECK(theorem2_constants(n + 1, ld, lu, lf).log_neg_log_lambda < c.log_neg_log_lambda);
          if (ld < 10) CHECK(theorem2_constants(n, ld + 1, lu, lf).log_neg_log_lambda < c.log_neg_log_lambda);
          if (lu < 10) CHECK(theorem2_constants(n, ld, lu + 1, lf).log_neg_log_lambda < c.log_neg_log_lambda);
          if (lf < 10) CHECK(theorem2_constants(n, ld, lu, lf + 1).log_neg_log_lambda < c.log_neg_log_lambda);
        }
      }
    }
  }
}

TEST_CASE("consensus decay check") {
  const auto cyc = standard_topology(Topology::Cycle, 4);
  const std::vector<double> x0{1, 2, 3, 4};
  const auto constants = theorem2_constants(4, 1, 1, 1);

  SUBCASE("synchronous cycle") {
    const auto report = check_raps_decay(run_raps(cyc, x0, synchronous_schedule(cyc, 300)).trace, constants);
    CHECK(report.bound_holds);
    CHECK(report.mean == 2.5);
    CHECK(report.l1_norm == 10);
    CHECK(report.empirical_rate > 0);
    CHECK(report.empirical_rate < 0.95);
    CHECK(report.empirical_rate < constants.lambda());
  }
  SUBCASE("consensus start") {
    const std::vector<double> flat(4, 2.0);
    const auto report = check_raps_decay(run_raps(cyc, flat, synchronous_schedule(cyc, 50)).trace, constants);
    CHECK(report.bound_holds);
    CHECK(report.max_error == 0.0);
    CHECK(report.fitted_points == 0);
  }
  SUBCASE("asynchronous star") {
    const auto star = standard_topology(Topology::Star, 4);
    const NetworkParams p{3, 5, 5, 0.5, 0.1};
    const auto report = check_raps_decay(run_raps(star, x0, p, 1500, {.seed = 6}).trace,
                                         theorem2_constants(4, 3, 5, 5));
    CHECK(report.bound_holds);
    CHECK(report.empirical_rate < 1);
  }
  SUBCASE("synthetic geometric error") {
    RapsTrace t;
    t.n = 2;
    t.initial = {0, 2};
    for (int k = 0; k <= 30; ++k) {
      const double e = std::ldexp(1.0, -k);
      t.z.push_back({1 + e, 1 - e});
    }
    const auto report = check_raps_decay(t, constants);
    CHECK(report.empirical_rate == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(report.fitted_points == 62);
    CHECK(report.bound_holds);
    CHECK(report.final_error == std::ldexp(1.0, -30));
  }
  SUBCASE("a trace that breaks the bound") {
    RapsTrace t;
    t.n = 2;
    t.initial = {1, 2};
    t.z = {{1, 2}, {1.5, 1.5}, {40, 1.5}};
    const auto report = check_raps_decay(t, constants);
    CHECK_FALSE(report.bound_holds);
    CHECK(report.first_violation_tick == 2);
  }
}

TEST_CASE("rate estimate is the endpoint difference over the window") {
  const auto g = standard_topology(Topology::Path, 2);
  const HypothesisModel model = two_coins();
  const Objective obj = objective(model);
  const auto run = run_learning(g, model, synchronous_schedule(g, 2000), {.seed = 4});
  const auto est = estimate_rate(run.trace, model, obj, 0.25);
  CHECK(est.window_start == 1500);
  CHECK(est.window_end == 2000);
  REQUIRE(est.entries.size() == 2);
  const double predicted = -(testing::coin_kl(0.7, 0.4) + testing::coin_kl(0.3, 0.5)) / 2;
  for (const RateEntry& e : est.entries) {
    CHECK(e.wrong == 0);
    CHECK(e.best == 1);
    const int i = e.agent;
    const double expected = ((run.trace.log_belief(2000, i, 0) - run.trace.log_belief(2000, i, 1)) -
                             (run.trace.log_belief(1500, i, 0) - run.trace.log_belief(1500, i, 1))) /
                            500;
    CHECK(e.slope == doctest::Approx(expected).epsilon(1e-14));
    CHECK(e.slope < 0);
    CHECK(e.predicted == doctest::Approx(predicted).epsilon(1e-12));
    CHECK(e.window_concentrated);
  }
  CHECK(est.bound == doctest::Approx(-obj.gap / 2));

  CHECK(code_of([&] { estimate_rate(run.trace, model, obj, 0.0); }) == ErrorCode::WindowTooShort);
  CHECK(code_of([&] { estimate_rate(run.trace, model, obj, 1.5); }) == ErrorCode::WindowTooShort);
}

TEST_CASE("indistinguishable hypotheses are excluded from rate pairs") {
  const auto g = standard_topology(Topology::Path, 2);
  HypothesisModel model({testing::coin_agent(0.7, {0.4, 0.7, 0.7}), testing::coin_agent(0.3, {0.5, 0.3, 0.3})});
  const Objective obj = objective(model);
  CHECK(obj.optimal == std::vector<int>{1, 2});
  const auto run = run_learning(g, model, synchronous_schedule(g, 500), {.seed = 1});
  const auto est = estimate_rate(run.trace, model, obj, 0.5);
  CHECK(est.entries.size() == 4);  // wrong = 0 against best in {1, 2}, two agents
  for (const RateEntry& e : est.entries) CHECK(e.wrong == 0);
  // The two optimal hypotheses keep equal beliefs.
  CHECK(run.trace.log_belief(500, 0, 1) == doctest::Approx(run.trace.log_belief(500, 0, 2)).epsilon(1e-12));
}

TEST_CASE("recursion audit") {
  SUBCASE("loss-free two-node run") {
    const auto g = standard_topology(Topology::Path, 2);
    const auto schedule = synchronous_schedule(g, 100);
    const auto run = run_learning(g, two_coins(), schedule, {.seed = 2, .record_history = true});
    const auto a = audit_lemma1_recursions(g, schedule, {1, 1, 1, 1.0, 0.0}, run, 0, 1);
    CHECK(a.max_abs <= 1e-10);
  }
  SUBCASE("lossy star and its fault-injected twin") {
    const auto g = standard_topology(Topology::Star, 4);
    const HypothesisModel model(calibrated_agents(kCalibratedShift));
    const NetworkParams p{3, 5, 5, 0.9, 0.2};
    const auto schedule = schedule_for(g, p, 500, 0);
    RunOptions o{.seed = 0, .record_history = true};
    const auto run = run_learning(g, model, schedule, o);
    for (int wrong : {0, 1}) {
      const auto a = audit_lemma1_recursions(g, schedule, p, run, wrong, 2);
      CHECK(a.max_abs <= 1e-9);
      CHECK(a.max_rel <= a.max_abs);
    }
    o.fault = FaultInjection{1, 100};
    const auto broken = run_learning(g, model, schedule, o);
    CHECK(audit_lemma1_recursions(g, schedule, p, broken, 0, 2).max_abs > 1e-3);
  }
  SUBCASE("relative residuals do not grow with the horizon") {
    const auto g = standard_topology(Topology::Path, 4);
    const HypothesisModel model(calibrated_agents(kCalibratedShift));
    const NetworkParams p{3, 5, 5, 0.5, 0.1};
    double rel[2];
    int slot = 0;
    for (int horizon : {200, 2000}) {
      const auto schedule = schedule_for(g, p, horizon, 3);
      const auto run = run_learning(g, model, schedule, {.seed = 3, .record_history = true});
      rel[slot++] = audit_lemma1_recursions(g, schedule, p, run, 0, 2).max_rel;
    }
    CHECK(rel[1] <= 10 * rel[0]);
  }
  SUBCASE("needs a recorded history") {
    const auto g = standard_topology(Topology::Path, 2);
    const auto schedule = synchronous_schedule(g, 10);
    const auto run = run_learning(g, two_coins(), schedule, {.seed = 2});
    CHECK(code_of([&] { audit_lemma1_recursions(g, schedule, {1, 1, 1, 1.0, 0.0}, run, 0, 1); }) ==
          ErrorCode::HistoryMissing);
  }
}

TEST_CASE("synchronous reference oracle") {
  SUBCASE("uninformative data keeps beliefs uniform in both implementations") {
    const auto g = standard_topology(Topology::Path, 2);
    HypothesisModel model({testing::coin_agent(0.5, {0.5, 0.5}), testing::coin_agent(0.5, {0.5, 0.5})});
    const auto tape = stream_tape(model, 1, 30);
    RunOptions o;
    o.tape = tape;
    const auto run = run_learning(g, model, synchronous_schedule(g, 30), o);
    const auto ref = synchronous_reference(g, model, tape, 30);
    for (const auto& tick : ref.log_mu) {
      for (const auto& agent : tick) {
        for (double v : agent) CHECK(v == doctest::Approx(std::log(0.5)).epsilon(1e-15));
      }
    }
    CHECK(max_reference_gap(run, ref) <= 1e-15);
  }
  SUBCASE("a single hypothesis has belief one") {
    const auto g = standard_topology(Topology::Cycle, 3);
    HypothesisModel model({testing::coin_agent(0.5, {0.3}), testing::coin_agent(0.5, {0.6}),
                           testing::coin_agent(0.5, {0.5})});
    const auto tape = stream_tape(model, 2, 20);
    const auto ref = synchronous_reference(g, model, tape, 20);
    RunOptions o;
    o.tape = tape;
    const auto run = run_learning(g, model, synchronous_schedule(g, 20), o);
    for (int k = 0; k <= 20; ++k) {
      for (int i = 0; i < 3; ++i) {
        CHECK(ref.log_mu[k][i][0] == 0.0);
        CHECK(run.trace.belief(k, i, 0) == 1.0);
      }
    }
  }
  SUBCASE("calibrated star, first 50 ticks, seed 0 streams") {
    const auto g = standard_topology(Topology::Star, 4);
    const HypothesisModel model(calibrated_agents(kCalibratedShift));
    const auto run = run_learning(g, model, synchronous_schedule(g, 50), {.seed = 0});
    const auto ref = synchronous_reference(g, model, stream_tape(model, 0, 50), 50);
    for (int k = 0; k <= 50; ++k) {
      for (int t = 0; t < 3; ++t) {
        CHECK(std::abs(run.trace.log_belief(k, 0, t) - ref.log_mu[k][0][t]) <= 1e-10);
      }
      CHECK(std::abs(run.trace.weight(k, 0) - ref.y[k][0]) <= 1e-12);
    }
  }
  SUBCASE("weights follow column-stochastic mixing") {
    const auto g = standard_topology(Topology::Star, 3);
    HypothesisModel model({testing::coin_agent(0.5, {0.5}), testing::coin_agent(0.5, {0.5}),
                           testing::coin_agent(0.5, {0.5})});
    const auto ref = synchronous_reference(g, model, stream_tape(model, 0, 3), 3);
    // Hub keeps 1/3 and gets 1/2 from each leaf one tick later.
    CHECK(ref.y[1][0] == doctest::Approx(1.0 / 3));
    CHECK(ref.y[1][1] == doctest::Approx(0.5));
    CHECK(ref.y[2][0] == doctest::Approx(1.0 / 9 + 1.0));
    CHECK(ref.y[2][1] == doctest::Approx(0.25 + 1.0 / 3));
    for (const auto& row : ref.y) CHECK(row[0] + row[1] + row[2] <= 3.0 + 1e-12);
  }
  SUBCASE("tape too short") {
    const auto g = standard_topology(Topology::Path, 2);
    CHECK(code_of([&] { synchronous_reference(g, two_coins(), stream_tape(two_coins(), 0, 5), 6); }) ==
          ErrorCode::ObservationTapeExhausted);
  }
}
