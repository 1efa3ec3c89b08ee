#pragma once

// Tunes the free source parameters so that the expected (noise-free)
// measurements hit target values:
//   * peak_pair_rate: matched-angle coincidence rate with both polarizers removed;
//   * purity: CHSH S at the configured analyzer angles.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdc/analysis.hpp"
#include "spdc/config.hpp"
#include "spdc/error.hpp"
#include "spdc/protocol.hpp"

namespace spdc {

struct CalibrationTargets {
  double matched_coinc_rate = 330.0;  ///< cps, polarizers removed
  double chsh_s = 2.307;
};

/// Expected coincidence rate at the configured rail angles with the polarizers removed.
inline double expected_open_coinc_rate(const ApparatusConfig& cfg) {
  ApparatusConfig c = cfg;
  c.polarizer_a_in = false;
  c.polarizer_b_in = false;
  return expected_rates(c, 0.0, 0.0).coinc;
}

/// S of noise-free expected counts at the configured CHSH angles.
inline double expected_chsh_s(const ApparatusConfig& cfg) {
  std::vector<CountRecord> recs;
  for (const auto& a : chsh_setting_angles(cfg.protocol.chsh_angles)) {
    CountRecord r = expected_setting(cfg, a.alpha_deg, a.beta_deg, cfg.protocol.duration_s);
    if (cfg.protocol.subtract_accidentals) r = subtract_accidentals(r, cfg.circuit.input_pulse_width_ns);
    recs.push_back(r);
  }
  return chsh_S(cfg.protocol.chsh_angles, recs).s;
}

namespace detail {

// Root of an increasing function on [lo, hi] by bisection.
inline double bisect_increasing(const std::function<double(double)>& f, double target, double lo, double hi,
                                const std::string& what) {
  if (f(lo) > target || f(hi) < target) throw ConfigError("calibration: target " + what + " is out of reach");
  for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Sets peak_pair_rate so that the open matched-angle coincidence rate equals `target_cps`.
inline ApparatusConfig calibrate_pair_rate(ApparatusConfig cfg, double target_cps) {
  cfg.validate();
  cfg.geometry.peak_pair_rate = detail::bisect_increasing(
      [&](double rate) {
        ApparatusConfig c = cfg;
        c.geometry.peak_pair_rate = rate;
        return expected_open_coinc_rate(c);
      },
      target_cps, 0.0, 1e7, "coincidence rate");
  return cfg;
}

/// Sets the source purity so that the expected CHSH S equals `target_s`.
inline ApparatusConfig calibrate_purity(ApparatusConfig cfg, double target_s) {
  cfg.validate();
  cfg.source.purity = detail::bisect_increasing(
      [&](double purity) {
        ApparatusConfig c = cfg;
        c.source.purity = purity;
        return expected_chsh_s(c);
      },
      target_s, 0.0, 1.0, "CHSH S");
  return cfg;
}

inline ApparatusConfig calibrate(const ApparatusConfig& cfg, const CalibrationTargets& targets = {}) {
  return calibrate_purity(calibrate_pair_rate(cfg, targets.matched_coinc_rate), targets.chsh_s);
}

}  // namespace spdc
