#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "spdc/detection_electronics.hpp"

using namespace spdc;

namespace {

std::vector<DetectionEvent> at(std::initializer_list<double> times_ns, Channel ch) {
  std::vector<DetectionEvent> v;
  for (double t : times_ns) v.push_back({1e-6 + t * 1e-9, ch, Origin::pair});
  return v;
}

std::vector<DetectionEvent> poisson_clicks(double rate, double duration, std::uint64_t seed, Channel ch) {
  DetectorModel ideal{1.0, 0.0, 0.0, 0.0};
  const auto t = emit_pair_times(rate, duration, seed);
  return detect(t, ch, ideal, duration, seed + 1);
}

}  // namespace

TEST(Detect, IdealDetectorIsIdentity) {
  const auto arrivals = emit_pair_times(1e4, 1.0, std::uint64_t{4});
  const auto ev = detect(arrivals, Channel::a, {1.0, 0.0, 0.0, 0.0}, 1.0, 9);
  ASSERT_EQ(ev.size(), arrivals.size());
  for (std::size_t i = 0; i < ev.size(); ++i) {
    EXPECT_EQ(ev[i].time_s, arrivals[i]);
    EXPECT_EQ(ev[i].origin, Origin::pair);
    EXPECT_EQ(ev[i].channel, Channel::a);
  }
}

TEST(Detect, DarkCountMean) {
  std::vector<double> counts;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto ev = detect({}, Channel::b, {0.0, 1000.0, 0.0, 0.0}, 10.0, seed);
    for (const auto& e : ev) ASSERT_EQ(e.origin, Origin::dark);
    counts.push_back(static_cast<double>(ev.size()));
  }
  EXPECT_NEAR(oracle::moments(counts).mean, 10000.0, 200.0);
}

TEST(Detect, DeadTimePrunesSecondClick) {
  const std::vector<double> arrivals = {1e-6, 1e-6 + 10e-9};
  const auto ev = detect(arrivals, Channel::a, {1.0, 0.0, 0.0, 50.0}, 1e-3, 1);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].time_s, 1e-6);
}

TEST(Detect, OutputSortedAndTagged) {
  const auto arrivals = emit_pair_times(5e3, 2.0, std::uint64_t{8});
  const auto ev = detect(arrivals, Channel::a, {0.6, 800.0, 1500.0, 50.0}, 2.0, 3);
  bool saw[3] = {false, false, false};
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (i) {
      ASSERT_GE(ev[i].time_s - ev[i - 1].time_s, 50e-9 - 1e-12);
    }
    saw[static_cast<int>(ev[i].origin)] = true;
  }
  EXPECT_TRUE(saw[0] && saw[1] && saw[2]);
}

TEST(Detect, RejectsUnsortedArrivals) {
  const std::vector<double> arrivals = {2.0, 1.0};
  EXPECT_THROW(detect(arrivals, Channel::a, {}, 3.0, 1), std::invalid_argument);
}

TEST(CoincidenceCircuit, DelayedBInsideAPulse) {
  const auto out = coincidence_circuit(at({0.0}, Channel::a), at({5.0}, Channel::b), {});
  EXPECT_EQ(out.count_coinc, 1u);
  ASSERT_EQ(out.coinc_times_s.size(), 1u);
  EXPECT_NEAR(out.coinc_times_s[0], 1e-6 + 18e-9, 1e-15);
}

TEST(CoincidenceCircuit, DelayedBAfterAPulse) {
  EXPECT_EQ(coincidence_circuit(at({0.0}, Channel::a), at({30.0}, Channel::b), {}).count_coinc, 0u);
}

TEST(CoincidenceCircuit, BFirstWithinAsymmetricWindow) {
  EXPECT_EQ(coincidence_circuit(at({0.0}, Channel::a), at({-10.0}, Channel::b), {}).count_coinc, 1u);
  EXPECT_EQ(coincidence_circuit(at({0.0}, Channel::a), at({-13.0}, Channel::b), {}).count_coinc, 1u);
  EXPECT_EQ(coincidence_circuit(at({0.0}, Channel::a), at({-13.5}, Channel::b), {}).count_coinc, 0u);
  EXPECT_EQ(coincidence_circuit(at({0.0}, Channel::a), at({12.0}, Channel::b), {}).count_coinc, 0u);
  EXPECT_EQ(coincidence_circuit(at({0.0}, Channel::a), at({11.5}, Channel::b), {}).count_coinc, 1u);
}

TEST(CoincidenceCircuit, CounterDeadTimeMergesCloseCoincidences) {
  const auto out = coincidence_circuit(at({0.0, 100.0}, Channel::a), at({0.0, 100.0}, Channel::b), {});
  EXPECT_EQ(out.count_coinc, 1u);
  EXPECT_EQ(out.count_a, 1u);
  EXPECT_EQ(out.count_b, 1u);
  const auto apart = coincidence_circuit(at({0.0, 300.0}, Channel::a), at({0.0, 300.0}, Channel::b), {});
  EXPECT_EQ(apart.count_coinc, 2u);
}

TEST(CoincidenceCircuit, RetriggerDuringInputPulseIsIgnored) {
  // The A click at 20 ns does not restart the pulse, so B's delayed edge at 38 ns misses.
  const auto out = coincidence_circuit(at({0.0, 20.0}, Channel::a), at({25.0}, Channel::b), {});
  EXPECT_EQ(out.count_coinc, 0u);
}

TEST(CoincidenceCircuit, Validation) {
  CircuitParams p;
  p.b_delay_ns = 25.0;
  EXPECT_THROW(coincidence_circuit({}, {}, p), std::invalid_argument);
  p.allow_out_of_range_delay = true;
  EXPECT_NO_THROW(coincidence_circuit({}, {}, p));
  p = {};
  p.output_pulse_width_ns = 20.0;
  EXPECT_THROW(coincidence_circuit({}, {}, p), std::invalid_argument);
  const auto unsorted = at({5.0, 0.0}, Channel::a);
  EXPECT_THROW(coincidence_circuit(unsorted, {}, CircuitParams{}), std::invalid_argument);
}

TEST(CoincidenceCircuit, SimultaneousPairsAlwaysDetected) {
  std::vector<DetectionEvent> a, b;
  for (int i = 0; i < 1000; ++i) {
    const double t = 1e-6 + i * 1e-6 + (i % 7) * 37e-9;
    a.push_back({t, Channel::a, Origin::pair});
    b.push_back({t, Channel::b, Origin::pair});
  }
  for (double d : {6.5, 13.0, 19.5}) {
    CircuitParams p;
    p.b_delay_ns = d;
    EXPECT_EQ(coincidence_circuit(a, b, p).count_coinc, 1000u) << "delay " << d;
  }
}

TEST(CoincidenceCircuit, CounterMonotonicity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double duration = 0.01;
    const auto a = poisson_clicks(2e6, duration, seed * 3, Channel::a);
    const auto b = poisson_clicks(1e6, duration, seed * 3 + 7, Channel::b);
    const auto out = coincidence_circuit(a, b, {});
    const double cap = duration / 250e-9 + 1.0;
    EXPECT_LE(out.count_a, a.size());
    EXPECT_LE(out.count_b, b.size());
    EXPECT_LE(static_cast<double>(out.count_a), cap);
    EXPECT_LE(static_cast<double>(out.count_coinc), cap);
    EXPECT_EQ(out.coinc_times_s.size(), out.count_coinc);
  }
}

TEST(AccidentalRate, Examples) {
  EXPECT_NEAR(accidental_rate(1e5, 1e5, 25.0), 250.0, 1e-9);
  EXPECT_EQ(accidental_rate(7e4, 0.0, 25.0), 0.0);
  EXPECT_NEAR(accidental_rate(5e4, 5e4, 25.0), 62.5, 1e-12);
  EXPECT_THROW(accidental_rate(-1.0, 1.0, 25.0), std::invalid_argument);
}

TEST(AccidentalRate, MatchesUncorrelatedStreamsThroughCircuit) {
  const double rate = 5e4, duration = 100.0;
  const auto a = poisson_clicks(rate, duration, 101, Channel::a);
  const auto b = poisson_clicks(rate, duration, 202, Channel::b);
  const auto out = coincidence_circuit(a, b, {});
  const double measured = static_cast<double>(out.count_coinc) / duration;
  const double predicted = accidental_rate(static_cast<double>(a.size()) / duration,
                                           static_cast<double>(b.size()) / duration, 25.0);
  EXPECT_NEAR(measured, 62.5, 0.05 * 62.5);
  // Within three Monte Carlo standard errors of the formula.
  EXPECT_NEAR(measured, predicted, 3.0 * std::sqrt(predicted * duration) / duration);
}

TEST(CoincidenceCircuit, UncorrelatedRateIndependentOfDelay) {
  const double duration = 40.0;
  const auto a = poisson_clicks(4e4, duration, 11, Channel::a);
  const auto b = poisson_clicks(4e4, duration, 12, Channel::b);
  std::vector<double> rates;
  for (double d : {6.5, 13.0, 19.5}) {
    CircuitParams p;
    p.b_delay_ns = d;
    rates.push_back(static_cast<double>(coincidence_circuit(a, b, p).count_coinc) / duration);
  }
  const double expected = accidental_rate(4e4, 4e4, 25.0);
  const double se = std::sqrt(expected * duration) / duration;
  for (double r : rates) EXPECT_NEAR(r, expected, 3.0 * se);
  EXPECT_NEAR(rates[0], rates[2], 3.0 * std::sqrt(2.0) * se);
}
