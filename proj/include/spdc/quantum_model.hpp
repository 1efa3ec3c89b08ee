#pragma once

// Two-photon polarization state of a two-crystal type-I source and the
// joint outcome probabilities of two linear polarizers.
//
// Angle convention (used everywhere in this library):
//   * The pump polarizer angle is measured from vertical. The vertical pump
//     component has amplitude cos(pol_angle) and downconverts in the first
//     crystal to a pair of horizontally polarized photons |HH>; the
//     horizontal component downconverts in the second crystal to |VV>.
//   * Analyzer angles are measured from the polarization axis of the |HH>
//     photons. An analyzer at angle x transmits cos(x)|H> + sin(x)|V>.
//
// With these conventions the coherent pair state is
//   cos(theta_l)|HH> + exp(i phi) sin(theta_l)|VV>
// and the decohered part keeps the same diagonal weights.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spdc {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double deg_to_rad(double deg) noexcept { return deg * (kPi / 180.0); }
inline constexpr double rad_to_deg(double rad) noexcept { return rad * (180.0 / kPi); }

/// Wraps `value` into [0, period).
inline double wrap(double value, double period) noexcept {
  double r = std::fmod(value, period);
  if (r < 0.0) r += period;
  // fmod of a tiny negative number can round up to exactly `period`.
  return r >= period ? 0.0 : r;
}

/// Pump light after the laser polarizer and the quartz plate.
struct PumpState {
  double pol_angle_deg = 45.0;  ///< from vertical, normalized to [0, 180)
  double phase_rad = 0.0;       ///< H/V relative phase, normalized to [0, 2pi)

  PumpState() = default;
  PumpState(double pol_angle, double phase)
      : pol_angle_deg(wrap(pol_angle, 180.0)), phase_rad(wrap(phase, kTwoPi)) {}

  friend bool operator==(const PumpState&, const PumpState&) = default;
};

struct PairState {
  double theta_l_deg = 45.0;  ///< balance angle in [0, 90]
  double phi_rad = 0.0;       ///< HH/VV relative phase in [0, 2pi)
  double purity = 1.0;        ///< weight of the coherent component

  PairState() = default;
  /// Normalizes `phi` and rejects out-of-range balance angle or purity.
  PairState(double theta_l, double phi, double purity_) : theta_l_deg(theta_l), phi_rad(wrap(phi, kTwoPi)), purity(purity_) {
    if (!(theta_l >= 0.0 && theta_l <= 90.0)) {
      throw std::invalid_argument("PairState: theta_l must lie in [0, 90] degrees, got " + std::to_string(theta_l));
    }
    if (!(purity_ >= 0.0 && purity_ <= 1.0)) {
      throw std::invalid_argument("PairState: purity must lie in [0, 1], got " + std::to_string(purity_));
    }
  }

  static PairState maximally_entangled() { return {45.0, 0.0, 1.0}; }

  friend bool operator==(const PairState&, const PairState&) = default;
};

struct SourceSettings {
  double purity = 1.0;
  double crystal_phase_offset_rad = 0.0;

  friend bool operator==(const SourceSettings&, const SourceSettings&) = default;
};

/// Pair state produced by the crystal pair for a given pump polarization.
///
/// Pump angles in (90, 180) have a negative vertical amplitude; the sign is
/// absorbed as an extra pi of relative phase so that theta_l stays in [0, 90].
inline PairState pump_to_pair_state(const PumpState& pump, const SourceSettings& source = {}) {
  double theta = pump.pol_angle_deg;
  double phi = pump.phase_rad + source.crystal_phase_offset_rad;
  if (theta > 90.0) {
    theta = 180.0 - theta;
    phi += kPi;
  }
  return PairState(theta, phi, source.purity);
}

/// Probabilities of the four transmit (t) / reject (r) outcome pairs.
struct JointProbs {
  double tt = 0.0;
  double tr = 0.0;
  double rt = 0.0;
  double rr = 0.0;

  double sum() const noexcept { return tt + tr + rt + rr; }
  /// Correlation tt + rr - tr - rt.
  double correlation() const noexcept { return tt + rr - tr - rt; }
};

namespace detail {

// P(both transmit) with analyzer direction cosines given explicitly, so that
// the +90 degree complements are exact rather than rounded through cos/sin.
inline double both_transmit(const PairState& s, double ca, double sa, double cb, double sb) noexcept {
  const double t = deg_to_rad(s.theta_l_deg);
  const double c = std::cos(t);
  const double sn = std::sin(t);
  const double x = ca * cb;
  const double y = sa * sb;
  return c * c * x * x + sn * sn * y * y + 2.0 * s.purity * c * sn * x * y * std::cos(s.phi_rad);
}

}  // namespace detail

inline JointProbs joint_outcome_probs(const PairState& state, double alpha_deg, double beta_deg) noexcept {
  const double a = deg_to_rad(alpha_deg);
  const double b = deg_to_rad(beta_deg);
  const double ca = std::cos(a), sa = std::sin(a);
  const double cb = std::cos(b), sb = std::sin(b);
  // Rotating an analyzer by +90 degrees maps (cos, sin) -> (-sin, cos).
  return {
      detail::both_transmit(state, ca, sa, cb, sb),
      detail::both_transmit(state, ca, sa, -sb, cb),
      detail::both_transmit(state, -sa, ca, cb, sb),
      detail::both_transmit(state, -sa, ca, -sb, cb),
  };
}

inline double coincidence_probability(const PairState& state, double alpha_deg, double beta_deg) noexcept {
  return joint_outcome_probs(state, alpha_deg, beta_deg).tt;
}

/// Probability that the channel-A photon alone passes an analyzer at `alpha_deg`.
inline double marginal_transmission_a(const PairState& state, double alpha_deg) noexcept {
  const auto p = joint_outcome_probs(state, alpha_deg, 0.0);
  return p.tt + p.tr;
}

inline double marginal_transmission_b(const PairState& state, double beta_deg) noexcept {
  const auto p = joint_outcome_probs(state, 0.0, beta_deg);
  return p.tt + p.rt;
}

/// Expectation value of the product of the two +/-1 analyzer outcomes.
inline double correlation_value(const PairState& state, double alpha_deg, double beta_deg) noexcept {
  return joint_outcome_probs(state, alpha_deg, beta_deg).correlation();
}

}  // namespace spdc
