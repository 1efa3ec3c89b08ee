#pragma once

// Apparatus configuration and its sectioned key-value text format.
//
//   # comment
//   [section]
//   key = value
//
// One section per bench component (laser, quartz_plate, crystals, irises,
// filters, polarizer_a, polarizer_b, detector_a, detector_b, circuit) plus
// [protocol]. Lists are comma separated. Missing keys keep their defaults;
// unknown sections or keys are errors.

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spdc/analysis.hpp"
#include "spdc/detection_electronics.hpp"
#include "spdc/error.hpp"
#include "spdc/quantum_model.hpp"
#include "spdc/records_io.hpp"
#include "spdc/source_kinematics.hpp"

namespace spdc {

enum class ProtocolKind { chsh, anglescan, polscan, circuit_test };
enum class SimulationMode {
  event,  ///< full discrete-event simulation of photons, clicks and circuit
  rate,   ///< analytic expected rates with Poisson-sampled counts
};

inline const char* to_string(ProtocolKind k) noexcept {
  switch (k) {
    case ProtocolKind::chsh: return "chsh";
    case ProtocolKind::anglescan: return "anglescan";
    case ProtocolKind::polscan: return "polscan";
    case ProtocolKind::circuit_test: return "circuit-test";
  }
  return "?";
}

inline const char* to_string(SimulationMode m) noexcept { return m == SimulationMode::event ? "event" : "rate"; }

inline const char* to_string(SpectralShape s) noexcept {
  switch (s) {
    case SpectralShape::gaussian: return "gaussian";
    case SpectralShape::flat: return "flat";
    case SpectralShape::degenerate: return "degenerate";
  }
  return "?";
}

struct ProtocolConfig {
  ProtocolKind kind = ProtocolKind::chsh;
  std::uint64_t seed = 1;
  SimulationMode mode = SimulationMode::event;
  double duration_s = 15.0;  ///< per setting
  ChshSettings chsh_angles;
  bool subtract_accidentals = false;
  int replicas = 200;  ///< Poisson replicas for the replicated CHSH sigma
  std::vector<double> anglescan_theta_a_deg = {2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<double> anglescan_theta_b_deg = {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0};
  std::vector<double> polscan_beta_deg = {0, 15, 30, 45, 60, 75, 90, 105, 120, 135, 150, 165, 180};
  bool fit_free_theta = false;
  bool fit_free_phi = false;
  bool fit_free_purity = false;
  double circuit_dt_min_ns = -30.0;
  double circuit_dt_max_ns = 30.0;
  double circuit_dt_step_ns = 0.5;

  friend bool operator==(const ProtocolConfig&, const ProtocolConfig&) = default;
};

struct ApparatusConfig {
  PumpState pump;  // laser polarizer + quartz plate
  SourceSettings source;
  SpectralModel spectral;  // pump wavelength + filters
  GeometryModel geometry;  // irises, rails and the pair flux
  double polarizer_a_deg = 0.0;  ///< fixed analyzer of a polarizer scan
  bool polarizer_a_in = true;
  bool polarizer_b_in = true;
  DetectorModel detector_a;
  DetectorModel detector_b;
  CircuitParams circuit;
  ProtocolConfig protocol;

  PairState pair_state() const { return pump_to_pair_state(pump, source); }

  /// Throws ConfigError naming the first violated constraint.
  void validate() const {
    try {
      (void)pair_state();
      if (!(source.purity >= 0.0 && source.purity <= 1.0)) throw std::invalid_argument("purity must lie in [0, 1]");
      spectral.validate();
      geometry.validate();
      detector_a.validate();
      detector_b.validate();
      circuit.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (!(protocol.duration_s > 0.0)) throw ConfigError("protocol: duration_s must be positive");
    if (protocol.replicas < 0) throw ConfigError("protocol: replicas must be non-negative");
    if (protocol.anglescan_theta_a_deg.empty() || protocol.anglescan_theta_b_deg.empty()) {
      throw ConfigError("protocol: anglescan grids must not be empty");
    }
    if (!(protocol.circuit_dt_step_ns > 0.0 && protocol.circuit_dt_max_ns >= protocol.circuit_dt_min_ns)) {
      throw ConfigError("protocol: bad circuit-test sweep");
    }
  }

  friend bool operator==(const ApparatusConfig&, const ApparatusConfig&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& v) {
  try {
    return parse_number(v);
  } catch (const CsvError&) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (auto cell : split(v, ',')) out.push_back(to_double(trim(cell)));
  return out;
}

inline std::string from_list(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    s += format_number(xs[i]);
  }
  return s;
}

inline std::string from_bool(bool b) { return b ? "true" : "false"; }

// Binds every key of the text format to a config field.
struct Binding {
  std::string section;
  std::string key;
  std::function<void(ApparatusConfig&, const std::string&)> set;
  std::function<std::string(const ApparatusConfig&)> get;
};

inline std::vector<Binding> bindings() {
  std::vector<Binding> b;
  auto num = [&b](std::string sec, std::string key, auto member) {
    b.push_back({std::move(sec), std::move(key),
                 [member](ApparatusConfig& c, const std::string& v) { member(c) = to_double(v); },
                 [member](const ApparatusConfig& c) { return format_number(member(c)); }});
  };
  auto flag = [&b](std::string sec, std::string key, auto member) {
    b.push_back({std::move(sec), std::move(key),
                 [member](ApparatusConfig& c, const std::string& v) { member(c) = to_bool(v); },
                 [member](const ApparatusConfig& c) { return from_bool(member(c)); }});
  };
  auto list = [&b](std::string sec, std::string key, auto member) {
    b.push_back({std::move(sec), std::move(key),
                 [member](ApparatusConfig& c, const std::string& v) { member(c) = to_list(v); },
                 [member](const ApparatusConfig& c) { return from_list(member(c)); }});
  };

  // Pump angle and phase are normalized on assignment.
  b.push_back({"laser", "pol_angle_deg",
               [](ApparatusConfig& c, const std::string& v) { c.pump = PumpState(to_double(v), c.pump.phase_rad); },
               [](const ApparatusConfig& c) { return format_number(c.pump.pol_angle_deg); }});
  num("laser", "wavelength_nm", [](auto& c) -> auto& { return c.spectral.lambda_pump_nm; });
  b.push_back({"quartz_plate", "phase_rad",
               [](ApparatusConfig& c, const std::string& v) { c.pump = PumpState(c.pump.pol_angle_deg, to_double(v)); },
               [](const ApparatusConfig& c) { return format_number(c.pump.phase_rad); }});

  num("crystals", "purity", [](auto& c) -> auto& { return c.source.purity; });
  num("crystals", "phase_offset_rad", [](auto& c) -> auto& { return c.source.crystal_phase_offset_rad; });
  num("crystals", "peak_pair_rate", [](auto& c) -> auto& { return c.geometry.peak_pair_rate; });

  num("irises", "theta_a_deg", [](auto& c) -> auto& { return c.geometry.theta_a_deg; });
  num("irises", "theta_b_deg", [](auto& c) -> auto& { return c.geometry.theta_b_deg; });
  num("irises", "angular_sigma_deg", [](auto& c) -> auto& { return c.geometry.angular_sigma_deg; });
  num("irises", "iris_factor", [](auto& c) -> auto& { return c.geometry.iris_factor; });

  num("filters", "edge_nm", [](auto& c) -> auto& { return c.spectral.filter_edge_nm; });
  num("filters", "steepness_nm", [](auto& c) -> auto& { return c.spectral.filter_steepness_nm; });
  num("filters", "band_min_nm", [](auto& c) -> auto& { return c.spectral.band_min_nm; });
  num("filters", "band_max_nm", [](auto& c) -> auto& { return c.spectral.band_max_nm; });
  b.push_back({"filters", "spectrum",
               [](ApparatusConfig& c, const std::string& v) {
                 if (v == "gaussian") c.spectral.shape = SpectralShape::gaussian;
                 else if (v == "flat") c.spectral.shape = SpectralShape::flat;
                 else if (v == "degenerate") c.spectral.shape = SpectralShape::degenerate;
                 else throw ConfigError("unknown spectrum '" + v + "'");
               },
               [](const ApparatusConfig& c) { return std::string(to_string(c.spectral.shape)); }});
  num("filters", "spectral_width_nm", [](auto& c) -> auto& { return c.spectral.spectral_width_nm; });

  num("polarizer_a", "angle_deg", [](auto& c) -> auto& { return c.polarizer_a_deg; });
  flag("polarizer_a", "in_place", [](auto& c) -> auto& { return c.polarizer_a_in; });
  flag("polarizer_b", "in_place", [](auto& c) -> auto& { return c.polarizer_b_in; });

  for (const char* sec : {"detector_a", "detector_b"}) {
    const bool is_a = std::string_view(sec) == "detector_a";
    auto det = [is_a](auto& c) -> auto& { return is_a ? c.detector_a : c.detector_b; };
    num(sec, "efficiency", [det](auto& c) -> auto& { return det(c).efficiency; });
    num(sec, "dark_rate", [det](auto& c) -> auto& { return det(c).dark_rate; });
    num(sec, "background_rate", [det](auto& c) -> auto& { return det(c).background_rate; });
    num(sec, "dead_time_ns", [det](auto& c) -> auto& { return det(c).dead_time_ns; });
  }

  num("circuit", "input_pulse_width_ns", [](auto& c) -> auto& { return c.circuit.input_pulse_width_ns; });
  num("circuit", "b_delay_ns", [](auto& c) -> auto& { return c.circuit.b_delay_ns; });
  num("circuit", "output_pulse_width_ns", [](auto& c) -> auto& { return c.circuit.output_pulse_width_ns; });
  flag("circuit", "allow_out_of_range_delay", [](auto& c) -> auto& { return c.circuit.allow_out_of_range_delay; });

  b.push_back({"protocol", "kind",
               [](ApparatusConfig& c, const std::string& v) {
                 if (v == "chsh") c.protocol.kind = ProtocolKind::chsh;
                 else if (v == "anglescan") c.protocol.kind = ProtocolKind::anglescan;
                 else if (v == "polscan") c.protocol.kind = ProtocolKind::polscan;
                 else if (v == "circuit-test") c.protocol.kind = ProtocolKind::circuit_test;
                 else throw ConfigError("unknown protocol '" + v + "'");
               },
               [](const ApparatusConfig& c) { return std::string(to_string(c.protocol.kind)); }});
  b.push_back({"protocol", "seed",
               [](ApparatusConfig& c, const std::string& v) {
                 try {
                   if (v.empty() || v.front() == '-' || v.front() == '+') throw std::invalid_argument(v);
                   std::size_t used = 0;
                   c.protocol.seed = std::stoull(v, &used);
                   if (used != v.size()) throw std::invalid_argument(v);
                 } catch (const std::exception&) {
                   throw ConfigError("expected an unsigned integer seed, got '" + v + "'");
                 }
               },
               [](const ApparatusConfig& c) { return std::to_string(c.protocol.seed); }});
  b.push_back({"protocol", "mode",
               [](ApparatusConfig& c, const std::string& v) {
                 if (v == "event") c.protocol.mode = SimulationMode::event;
                 else if (v == "rate") c.protocol.mode = SimulationMode::rate;
                 else throw ConfigError("unknown mode '" + v + "'");
               },
               [](const ApparatusConfig& c) { return std::string(to_string(c.protocol.mode)); }});
  num("protocol", "duration_s", [](auto& c) -> auto& { return c.protocol.duration_s; });
  b.push_back({"protocol", "chsh_angles_deg",
               [](ApparatusConfig& c, const std::string& v) {
                 const auto xs = to_list(v);
                 if (xs.size() != 4) throw ConfigError("chsh_angles_deg needs four angles a, a', b, b'");
                 c.protocol.chsh_angles = {xs[0], xs[1], xs[2], xs[3]};
               },
               [](const ApparatusConfig& c) {
                 const auto& s = c.protocol.chsh_angles;
                 return from_list({s.a, s.a_prime, s.b, s.b_prime});
               }});
  flag("protocol", "subtract_accidentals", [](auto& c) -> auto& { return c.protocol.subtract_accidentals; });
  b.push_back({"protocol", "replicas",
               [](ApparatusConfig& c, const std::string& v) {
                 const double x = to_double(v);
                 if (x != static_cast<int>(x)) throw ConfigError("replicas must be an integer");
                 c.protocol.replicas = static_cast<int>(x);
               },
               [](const ApparatusConfig& c) { return std::to_string(c.protocol.replicas); }});
  list("protocol", "anglescan_theta_a_deg", [](auto& c) -> auto& { return c.protocol.anglescan_theta_a_deg; });
  list("protocol", "anglescan_theta_b_deg", [](auto& c) -> auto& { return c.protocol.anglescan_theta_b_deg; });
  list("protocol", "polscan_beta_deg", [](auto& c) -> auto& { return c.protocol.polscan_beta_deg; });
  flag("protocol", "fit_free_theta", [](auto& c) -> auto& { return c.protocol.fit_free_theta; });
  flag("protocol", "fit_free_phi", [](auto& c) -> auto& { return c.protocol.fit_free_phi; });
  flag("protocol", "fit_free_purity", [](auto& c) -> auto& { return c.protocol.fit_free_purity; });
  num("protocol", "circuit_dt_min_ns", [](auto& c) -> auto& { return c.protocol.circuit_dt_min_ns; });
  num("protocol", "circuit_dt_max_ns", [](auto& c) -> auto& { return c.protocol.circuit_dt_max_ns; });
  num("protocol", "circuit_dt_step_ns", [](auto& c) -> auto& { return c.protocol.circuit_dt_step_ns; });
  return b;
}

}  // namespace detail

/// Parses the key-value format. The result is validated.
inline ApparatusConfig parse_config(std::istream& is) {
  ApparatusConfig cfg;
  const auto binds = detail::bindings();
  std::map<std::string, std::map<std::string, const detail::Binding*>> table;
  for (const auto& b : binds) table[b.section][b.key] = &b;

  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string text = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (text.empty()) continue;
    const auto where = "config line " + std::to_string(lineno) + ": ";
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where + "unterminated section header");
      section = detail::trim(std::string_view(text).substr(1, text.size() - 2));
      if (!table.contains(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = detail::trim(std::string_view(text).substr(0, eq));
    const std::string value = detail::trim(std::string_view(text).substr(eq + 1));
    const auto& keys = table[section];
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    try {
      it->second->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline ApparatusConfig parse_config(std::string_view text) {
  std::istringstream is{std::string(text)};
  return parse_config(is);
}

/// Writes every key; parse_config(serialize_config(c)) == c.
inline void serialize_config(std::ostream& os, const ApparatusConfig& cfg) {
  std::string section;
  bool first = true;
  for (const auto& b : detail::bindings()) {
    if (b.section != section) {
      if (!first) os << '\n';
      first = false;
      section = b.section;
      os << '[' << section << "]\n";
    }
    os << b.key << " = " << b.get(cfg) << '\n';
  }
}

inline std::string serialize_config(const ApparatusConfig& cfg) {
  std::ostringstream os;
  serialize_config(os, cfg);
  return os.str();
}

}  // namespace spdc
