#pragma once

// Where and when downconverted photons show up: energy-conserving wavelength
// pairing behind long-pass filters, the detector-rail angular correlation,
// and Poisson emission in time.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdc/random.hpp"

namespace spdc {

/// Longest wavelength accepted for either photon of a pair. Signal
/// wavelengths so close to the pump that the idler lands beyond this are
/// treated as unphysical.
inline constexpr double kMaxPhotonWavelengthNm = 5000.0;

/// Idler wavelength from energy conservation, 1/idler = 1/pump - 1/signal.
inline double idler_wavelength(double lambda_signal_nm, double lambda_pump_nm) {
  if (!(lambda_pump_nm > 0.0)) {
    throw std::invalid_argument("idler_wavelength: pump wavelength must be positive");
  }
  if (!(lambda_signal_nm > lambda_pump_nm)) {
    throw std::invalid_argument("idler_wavelength: signal wavelength " + std::to_string(lambda_signal_nm) +
                                " nm does not exceed the pump wavelength");
  }
  const double idler = 1.0 / (1.0 / lambda_pump_nm - 1.0 / lambda_signal_nm);
  if (lambda_signal_nm > kMaxPhotonWavelengthNm || idler > kMaxPhotonWavelengthNm) {
    throw std::invalid_argument("idler_wavelength: signal " + std::to_string(lambda_signal_nm) +
                                " nm pairs with an idler outside the physical band");
  }
  return idler;
}

/// Long-pass filter transmission. A zero steepness gives a hard edge with
/// T(edge) = 1/2.
inline double filter_transmission(double lambda_nm, double edge_nm, double steepness_nm) noexcept {
  if (steepness_nm <= 0.0) {
    if (lambda_nm > edge_nm) return 1.0;
    if (lambda_nm < edge_nm) return 0.0;
    return 0.5;
  }
  return 1.0 / (1.0 + std::exp(-(lambda_nm - edge_nm) / steepness_nm));
}

enum class SpectralShape {
  gaussian,    ///< truncated Gaussian about the degenerate wavelength
  flat,        ///< uniform over the signal band
  degenerate,  ///< every pair exactly degenerate
};

struct SpectralModel {
  double lambda_pump_nm = 405.0;
  double band_min_nm = 700.0;
  double band_max_nm = 920.0;
  double filter_edge_nm = 780.0;
  double filter_steepness_nm = 5.0;
  SpectralShape shape = SpectralShape::gaussian;
  double spectral_width_nm = 30.0;  ///< RMS width of the Gaussian shape

  double degenerate_nm() const noexcept { return 2.0 * lambda_pump_nm; }

  friend bool operator==(const SpectralModel&, const SpectralModel&) = default;

  void validate() const {
    if (!(lambda_pump_nm > 0.0)) throw std::invalid_argument("spectral model: pump wavelength must be positive");
    if (!(band_min_nm < band_max_nm)) throw std::invalid_argument("spectral model: empty signal band");
    if (!(degenerate_nm() >= band_min_nm && degenerate_nm() <= band_max_nm)) {
      throw std::invalid_argument("spectral model: degenerate wavelength outside the signal band");
    }
    // Both band ends must pair with a physical idler.
    (void)idler_wavelength(band_min_nm, lambda_pump_nm);
    (void)idler_wavelength(band_max_nm, lambda_pump_nm);
    if (!(filter_steepness_nm >= 0.0)) throw std::invalid_argument("spectral model: negative filter steepness");
    if (std::isnan(filter_edge_nm)) throw std::invalid_argument("spectral model: filter edge is NaN");
    if (shape == SpectralShape::gaussian && !(spectral_width_nm > 0.0)) {
      throw std::invalid_argument("spectral model: spectral width must be positive");
    }
  }
};

/// Filter acceptance of one source configuration.
struct SpectralAcceptance {
  double pair = 0.0;          ///< both photons pass
  double signal_only = 0.0;   ///< marginal for the signal photon
  double idler_only = 0.0;    ///< marginal for the idler photon

  /// Marginal acceptance for a detector that sees signal or idler with equal odds.
  double single() const noexcept { return 0.5 * (signal_only + idler_only); }
};

namespace detail {

// 5-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 5> kGlNodes = {
    0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
inline constexpr std::array<double, 5> kGlWeights = {
    0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891, 0.2369268850561891};

}  // namespace detail

/// Filter acceptances by composite Gauss-Legendre quadrature over the
/// signal band. The band is split wherever either photon crosses the filter
/// edge, which makes hard-edge filters exact up to rounding.
inline SpectralAcceptance spectral_acceptance(const SpectralModel& m, int panels_per_segment = 200) {
  m.validate();
  const double edge = m.filter_edge_nm;
  const double steep = m.filter_steepness_nm;
  auto transmit = [&](double l) { return filter_transmission(l, edge, steep); };

  if (m.shape == SpectralShape::degenerate) {
    const double t = transmit(m.degenerate_nm());
    return {t * t, t, t};
  }

  std::vector<double> cuts = {m.band_min_nm, m.band_max_nm};
  auto add_cut = [&](double x) {
    if (std::isfinite(x) && x > m.band_min_nm && x < m.band_max_nm) cuts.push_back(x);
  };
  add_cut(edge);
  if (std::isfinite(edge) && edge > m.lambda_pump_nm) {
    const double partner = 1.0 / (1.0 / m.lambda_pump_nm - 1.0 / edge);
    if (partner > 0.0) add_cut(partner);
  }
  std::sort(cuts.begin(), cuts.end());

  const double center = m.degenerate_nm();
  const double width = m.spectral_width_nm;
  auto density = [&](double l) {
    if (m.shape == SpectralShape::flat) return 1.0;
    const double z = (l - center) / width;
    return std::exp(-0.5 * z * z);
  };

  double norm = 0.0, pair = 0.0, sig = 0.0, idl = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double lo = cuts[s];
    const double h = (cuts[s + 1] - lo) / panels_per_segment;
    for (int p = 0; p < panels_per_segment; ++p) {
      const double mid = lo + (p + 0.5) * h;
      for (std::size_t k = 0; k < detail::kGlNodes.size(); ++k) {
        const double l = mid + 0.5 * h * detail::kGlNodes[k];
        const double w = 0.5 * h * detail::kGlWeights[k] * density(l);
        const double ts = transmit(l);
        const double ti = transmit(1.0 / (1.0 / m.lambda_pump_nm - 1.0 / l));
        norm += w;
        pair += w * ts * ti;
        sig += w * ts;
        idl += w * ti;
      }
    }
  }
  return {pair / norm, sig / norm, idl / norm};
}

inline double pair_spectral_acceptance(const SpectralModel& m) { return spectral_acceptance(m).pair; }

struct GeometryModel {
  double theta_a_deg = 3.0;
  double theta_b_deg = 3.0;
  double angular_sigma_deg = 1.0;
  double peak_pair_rate = 120.0;  ///< pairs/s into both irises at matched angles
  double iris_factor = 1.0;

  friend bool operator==(const GeometryModel&, const GeometryModel&) = default;

  void validate() const {
    if (!(theta_a_deg > 0.0 && theta_b_deg > 0.0)) throw std::invalid_argument("geometry: rail angles must be positive");
    if (!(angular_sigma_deg > 0.0)) throw std::invalid_argument("geometry: angular sigma must be positive");
    if (!(peak_pair_rate >= 0.0)) throw std::invalid_argument("geometry: negative pair rate");
    if (!(iris_factor > 0.0 && iris_factor <= 1.0)) throw std::invalid_argument("geometry: iris factor must lie in (0, 1]");
  }
};

/// Fraction of the peak pair flux for which both partners enter the irises.
inline double angular_acceptance(const GeometryModel& g) {
  g.validate();
  const double d = (g.theta_a_deg - g.theta_b_deg) / g.angular_sigma_deg;
  return std::exp(-0.5 * d * d) * g.iris_factor;
}

/// Homogeneous Poisson arrival times on [0, duration), ascending.
inline std::vector<double> emit_pair_times(double rate, double duration_s, Rng& rng) {
  if (!(rate >= 0.0)) throw std::invalid_argument("emit_pair_times: negative rate");
  if (!(duration_s > 0.0)) throw std::invalid_argument("emit_pair_times: duration must be positive");
  std::vector<double> times;
  if (rate == 0.0) return times;
  times.reserve(static_cast<std::size_t>(rate * duration_s * 1.05) + 16);
  std::exponential_distribution<double> gap(rate);
  double t = gap(rng);
  while (t < duration_s) {
    times.push_back(t);
    double dt = gap(rng);
    // Keep the stream strictly increasing even for a zero draw.
    t = dt > 0.0 ? t + dt : std::nextafter(t, std::numeric_limits<double>::infinity());
  }
  return times;
}

inline std::vector<double> emit_pair_times(double rate, double duration_s, std::uint64_t seed) {
  Rng rng(seed);
  return emit_pair_times(rate, duration_s, rng);
}

}  // namespace spdc
