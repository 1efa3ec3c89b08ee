#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spdc/analysis.hpp"
#include "spdc/quantum_model.hpp"

using namespace spdc;

TEST(PumpToPairState, DiagonalPumpGivesMaximallyEntangledState) {
  const auto s = pump_to_pair_state(PumpState(45.0, 0.0), {1.0, 0.0});
  EXPECT_EQ(s, PairState(45.0, 0.0, 1.0));
}

TEST(PumpToPairState, VerticalPumpGivesProductState) {
  for (double phase : {0.0, 1.0, 4.0}) {
    const auto s = pump_to_pair_state(PumpState(0.0, phase), {0.7, 0.0});
    EXPECT_DOUBLE_EQ(s.theta_l_deg, 0.0);
    for (double a : {0.0, 20.0, 77.0}) {
      for (double b : {5.0, 45.0, 130.0}) {
        const double ca = std::cos(deg_to_rad(a)), cb = std::cos(deg_to_rad(b));
        EXPECT_NEAR(coincidence_probability(s, a, b), ca * ca * cb * cb, 1e-15);
      }
    }
  }
}

TEST(PumpToPairState, PhasesAdd) {
  const auto s = pump_to_pair_state(PumpState(45.0, kPi / 3), {0.8, kPi / 6});
  EXPECT_DOUBLE_EQ(s.theta_l_deg, 45.0);
  EXPECT_NEAR(s.phi_rad, kPi / 2, 1e-15);
  EXPECT_DOUBLE_EQ(s.purity, 0.8);
}

TEST(PumpToPairState, ObtusePumpAngleFoldsIntoPhase) {
  // 135 degrees: amplitudes (cos, sin) = (-1, 1)/sqrt2, i.e. HH - VV.
  const auto s = pump_to_pair_state(PumpState(135.0, 0.0));
  EXPECT_NEAR(s.theta_l_deg, 45.0, 1e-12);
  EXPECT_NEAR(s.phi_rad, kPi, 1e-12);
}

TEST(PumpState, Normalizes) {
  const PumpState p(-30.0, -1.0);
  EXPECT_NEAR(p.pol_angle_deg, 150.0, 1e-12);
  EXPECT_NEAR(p.phase_rad, kTwoPi - 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(PumpState(180.0, kTwoPi).pol_angle_deg, 0.0);
}

TEST(PairState, RejectsOutOfRange) {
  EXPECT_THROW(PairState(45.0, 0.0, 1.2), std::invalid_argument);
  EXPECT_THROW(PairState(45.0, 0.0, -0.1), std::invalid_argument);
  EXPECT_THROW(PairState(91.0, 0.0, 1.0), std::invalid_argument);
  EXPECT_NO_THROW(PairState(90.0, 7.0, 0.0));
}

TEST(JointOutcomeProbs, BellStateExamples) {
  const auto bell = PairState::maximally_entangled();
  EXPECT_NEAR(joint_outcome_probs(bell, 0.0, 0.0).tt, 0.5, 1e-15);
  EXPECT_NEAR(joint_outcome_probs(bell, 0.0, 90.0).tt, 0.0, 1e-15);
  // Frozen from the density-matrix oracle: 1/2 cos^2(45 deg).
  const double frozen = 0.25;
  EXPECT_NEAR(oracle::joint(45.0, 0.0, 1.0, 0.0, 45.0).tt, frozen, 1e-15);
  EXPECT_NEAR(joint_outcome_probs(bell, 0.0, 45.0).tt, frozen, 1e-15);
  EXPECT_NEAR(coincidence_probability(bell, 0.0, 45.0), frozen, 1e-15);
}

TEST(JointOutcomeProbs, NormalizationOnRandomInputs) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> theta(0.0, 90.0), phi(0.0, kTwoPi), purity(0.0, 1.0), angle(-360.0, 360.0);
  for (int i = 0; i < 10000; ++i) {
    const PairState s(theta(rng), phi(rng), purity(rng));
    const auto p = joint_outcome_probs(s, angle(rng), angle(rng));
    ASSERT_NEAR(p.sum(), 1.0, 1e-12);
    ASSERT_GE(p.tt, -1e-15);
    ASSERT_GE(p.rr, -1e-15);
  }
}

TEST(JointOutcomeProbs, PeriodicIn180Degrees) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> theta(0.0, 90.0), phi(0.0, kTwoPi), purity(0.0, 1.0), angle(0.0, 180.0);
  for (int i = 0; i < 500; ++i) {
    const PairState s(theta(rng), phi(rng), purity(rng));
    const double a = angle(rng), b = angle(rng);
    const auto p = joint_outcome_probs(s, a, b);
    const auto q = joint_outcome_probs(s, a + 180.0, b - 180.0);
    EXPECT_NEAR(p.tt, q.tt, 1e-12);
    EXPECT_NEAR(p.tr, q.tr, 1e-12);
    EXPECT_NEAR(p.rt, q.rt, 1e-12);
    EXPECT_NEAR(p.rr, q.rr, 1e-12);
  }
}

TEST(JointOutcomeProbs, BellStateDependsOnlyOnAngleDifference) {
  const auto bell = PairState::maximally_entangled();
  int checked = 0;
  for (double a = 0.0; a < 180.0; a += 15.0) {
    for (double b = 0.0; b < 180.0; b += 15.0) {
      const double c = std::cos(deg_to_rad(a - b));
      EXPECT_NEAR(coincidence_probability(bell, a, b), 0.5 * c * c, 1e-14);
      ++checked;
    }
  }
  EXPECT_GE(checked, 100);
}

TEST(JointOutcomeProbs, AgreesWithDensityMatrixOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> theta(0.0, 90.0), phi(0.0, kTwoPi), purity(0.0, 1.0), angle(0.0, 360.0);
  for (int i = 0; i < 1000; ++i) {
    const double t = theta(rng), f = phi(rng), p = purity(rng), a = angle(rng), b = angle(rng);
    const auto got = joint_outcome_probs(PairState(t, f, p), a, b);
    const auto want = oracle::joint(t, f, p, a, b);
    ASSERT_NEAR(got.tt, want.tt, 1e-10);
    ASSERT_NEAR(got.tr, want.tr, 1e-10);
    ASSERT_NEAR(got.rt, want.rt, 1e-10);
    ASSERT_NEAR(got.rr, want.rr, 1e-10);
  }
}

TEST(JointOutcomeProbs, MarginalsOfBellStateAreUnbiased) {
  const auto bell = PairState::maximally_entangled();
  for (double a : {0.0, 30.0, 45.0, 100.0}) {
    EXPECT_NEAR(marginal_transmission_a(bell, a), 0.5, 1e-15);
    EXPECT_NEAR(marginal_transmission_b(bell, a), 0.5, 1e-15);
  }
}

TEST(JointOutcomeProbs, ChshIsAffineInPurity) {
  const ChshSettings canon;
  auto s_of = [&](double purity) {
    const PairState st(45.0, 0.0, purity);
    return correlation_value(st, canon.a, canon.b) - correlation_value(st, canon.a, canon.b_prime) +
           correlation_value(st, canon.a_prime, canon.b) + correlation_value(st, canon.a_prime, canon.b_prime);
  };
  const double s0 = s_of(0.0), s_half = s_of(0.5), s1 = s_of(1.0);
  EXPECT_NEAR(s_half, 0.5 * (s0 + s1), 1e-12);
  EXPECT_NEAR(s1, 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(s0, std::sqrt(2.0), 1e-12);
}
