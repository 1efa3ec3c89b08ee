#pragma once

// Detector clicks and the flip-flop coincidence circuit.
//
// The circuit is simulated on an integer picosecond clock so that window
// edges given in (half-)nanoseconds are represented exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdc/random.hpp"
#include "spdc/source_kinematics.hpp"

namespace spdc {

enum class Channel : std::uint8_t { a, b };
enum class Origin : std::uint8_t {
  pair,        ///< downconverted photon (its partner may have been lost)
  background,  ///< uncorrelated fluorescence / stray light
  dark,        ///< detector dark count
};

inline const char* to_string(Channel c) noexcept { return c == Channel::a ? "A" : "B"; }

inline const char* to_string(Origin o) noexcept {
  switch (o) {
    case Origin::pair: return "pair";
    case Origin::background: return "background";
    case Origin::dark: return "dark";
  }
  return "?";
}

struct DetectionEvent {
  double time_s = 0.0;
  Channel channel = Channel::a;
  Origin origin = Origin::pair;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

struct DetectorModel {
  double efficiency = 0.5;
  double dark_rate = 250.0;         ///< counts/s
  double background_rate = 1000.0;  ///< detected counts/s after filter and polarizer
  double dead_time_ns = 50.0;

  friend bool operator==(const DetectorModel&, const DetectorModel&) = default;

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("detector: efficiency must lie in [0, 1]");
    if (!(dark_rate >= 0.0 && background_rate >= 0.0)) throw std::invalid_argument("detector: negative rate");
    if (!(dead_time_ns >= 0.0)) throw std::invalid_argument("detector: negative dead time");
  }
};

struct CircuitParams {
  double input_pulse_width_ns = 25.0;
  double b_delay_ns = 13.0;  ///< flip-flop clock-to-reset delay of the B path
  double output_pulse_width_ns = 250.0;
  bool allow_out_of_range_delay = false;

  friend bool operator==(const CircuitParams&, const CircuitParams&) = default;

  /// The flip-flop delay spread quoted for the parts.
  static constexpr double kMinDelayNs = 6.5;
  static constexpr double kMaxDelayNs = 19.5;

  void validate() const {
    if (!(input_pulse_width_ns > 0.0)) throw std::invalid_argument("circuit: input pulse width must be positive");
    if (!(output_pulse_width_ns > input_pulse_width_ns)) {
      throw std::invalid_argument("circuit: output pulses must be longer than input pulses");
    }
    if (!(b_delay_ns >= 0.0)) throw std::invalid_argument("circuit: negative B delay");
    if (!allow_out_of_range_delay && (b_delay_ns < kMinDelayNs || b_delay_ns > kMaxDelayNs)) {
      throw std::invalid_argument("circuit: B delay " + std::to_string(b_delay_ns) + " ns outside [6.5, 19.5] ns");
    }
  }
};

namespace detail {

inline std::vector<DetectionEvent> tag(const std::vector<double>& times, Channel ch, Origin o) {
  std::vector<DetectionEvent> out;
  out.reserve(times.size());
  for (double t : times) out.push_back({t, ch, o});
  return out;
}

}  // namespace detail

/// Turns photon arrivals on one channel into detector clicks.
///
/// Arrivals are thinned by the efficiency, dark and background clicks are
/// superposed as independent Poisson streams over [0, duration), and the
/// merged stream is pruned by a non-paralyzable dead time.
inline std::vector<DetectionEvent> detect(std::span<const double> arrivals, Channel channel, const DetectorModel& det,
                                          double duration_s, std::uint64_t seed) {
  det.validate();
  if (!std::is_sorted(arrivals.begin(), arrivals.end())) throw std::invalid_argument("detect: arrivals not sorted");

  Rng thin_rng(derive_seed(seed, 0));
  std::bernoulli_distribution kept(det.efficiency);
  std::vector<DetectionEvent> photons;
  photons.reserve(static_cast<std::size_t>(arrivals.size() * det.efficiency) + 16);
  for (double t : arrivals) {
    if (kept(thin_rng)) photons.push_back({t, channel, Origin::pair});
  }

  Rng dark_rng(derive_seed(seed, 1));
  Rng bg_rng(derive_seed(seed, 2));
  const auto dark = detail::tag(emit_pair_times(det.dark_rate, duration_s, dark_rng), channel, Origin::dark);
  const auto bg = detail::tag(emit_pair_times(det.background_rate, duration_s, bg_rng), channel, Origin::background);

  auto earlier = [](const DetectionEvent& x, const DetectionEvent& y) { return x.time_s < y.time_s; };
  std::vector<DetectionEvent> noise;
  noise.reserve(dark.size() + bg.size());
  std::merge(dark.begin(), dark.end(), bg.begin(), bg.end(), std::back_inserter(noise), earlier);
  std::vector<DetectionEvent> merged;
  merged.reserve(photons.size() + noise.size());
  std::merge(photons.begin(), photons.end(), noise.begin(), noise.end(), std::back_inserter(merged), earlier);

  const double dead_s = det.dead_time_ns * 1e-9;
  std::vector<DetectionEvent> out;
  out.reserve(merged.size());
  for (const auto& e : merged) {
    if (!out.empty() && e.time_s < out.back().time_s + dead_s) continue;
    out.push_back(e);
  }
  return out;
}

struct CircuitOutput {
  std::uint64_t count_a = 0;
  std::uint64_t count_b = 0;
  std::uint64_t count_coinc = 0;
  std::vector<double> coinc_times_s;  ///< delayed-B edge of each counted coincidence
};

namespace detail {

using Picoseconds = std::int64_t;

inline Picoseconds to_ps(double seconds) { return std::llround(seconds * 1e12); }
inline Picoseconds ns_to_ps(double ns) { return std::llround(ns * 1e3); }

// Rising edges of an edge-triggered one-shot: a click while the pulse is
// still high produces no new edge.
inline std::vector<Picoseconds> pulse_edges(std::span<const DetectionEvent> events, Picoseconds width) {
  std::vector<Picoseconds> edges;
  edges.reserve(events.size());
  for (const auto& e : events) {
    const Picoseconds t = to_ps(e.time_s);
    if (!edges.empty() && t < edges.back() + width) continue;
    edges.push_back(t);
  }
  return edges;
}

// Non-paralyzable counter behind a pulse stretcher of the given width.
inline std::uint64_t stretched_count(std::span<const Picoseconds> edges, Picoseconds width,
                                     std::vector<Picoseconds>* accepted = nullptr) {
  std::uint64_t n = 0;
  Picoseconds busy_until = 0;
  bool first = true;
  for (Picoseconds t : edges) {
    if (!first && t < busy_until) continue;
    first = false;
    busy_until = t + width;
    ++n;
    if (accepted) accepted->push_back(t);
  }
  return n;
}

}  // namespace detail

/// Simulates the coincidence circuit on two sorted click streams.
///
/// A coincidence is registered when the delayed B edge finds the A input
/// pulse high, i.e. when t_B - t_A lies in [-b_delay, width - b_delay).
inline CircuitOutput coincidence_circuit(std::span<const DetectionEvent> events_a, std::span<const DetectionEvent> events_b,
                                         const CircuitParams& params) {
  params.validate();
  auto by_time = [](const DetectionEvent& x, const DetectionEvent& y) { return x.time_s < y.time_s; };
  if (!std::is_sorted(events_a.begin(), events_a.end(), by_time) ||
      !std::is_sorted(events_b.begin(), events_b.end(), by_time)) {
    throw std::invalid_argument("coincidence_circuit: event lists not sorted");
  }

  const auto width = detail::ns_to_ps(params.input_pulse_width_ns);
  const auto delay = detail::ns_to_ps(params.b_delay_ns);
  const auto out_width = detail::ns_to_ps(params.output_pulse_width_ns);

  const auto a_edges = detail::pulse_edges(events_a, width);
  const auto b_edges = detail::pulse_edges(events_b, width);

  std::vector<detail::Picoseconds> coinc_edges;
  std::size_t ia = 0;
  for (auto tb : b_edges) {
    const auto clock = tb + delay;
    while (ia < a_edges.size() && a_edges[ia] <= clock) ++ia;
    // a_edges[ia - 1] is the last A pulse that started at or before the clock edge.
    if (ia > 0 && clock < a_edges[ia - 1] + width) coinc_edges.push_back(clock);
  }

  CircuitOutput out;
  out.count_a = detail::stretched_count(a_edges, out_width);
  out.count_b = detail::stretched_count(b_edges, out_width);
  std::vector<detail::Picoseconds> counted;
  out.count_coinc = detail::stretched_count(coinc_edges, out_width, &counted);
  out.coinc_times_s.reserve(counted.size());
  for (auto t : counted) out.coinc_times_s.push_back(static_cast<double>(t) * 1e-12);
  return out;
}

/// Expected accidental coincidence rate of two uncorrelated streams.
inline double accidental_rate(double rate_a, double rate_b, double window_ns) {
  if (!(rate_a >= 0.0 && rate_b >= 0.0)) throw std::invalid_argument("accidental_rate: negative rate");
  return rate_a * rate_b * window_ns * 1e-9;
}

}  // namespace spdc
