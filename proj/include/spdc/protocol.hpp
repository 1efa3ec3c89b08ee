#pragma once

// End-to-end simulated measurements: one polarizer setting, the sixteen
// setting CHSH run, the detector-angle scan and the polarizer scan.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spdc/analysis.hpp"
#include "spdc/config.hpp"
#include "spdc/detection_electronics.hpp"
#include "spdc/quantum_model.hpp"
#include "spdc/random.hpp"
#include "spdc/records_io.hpp"
#include "spdc/source_kinematics.hpp"

namespace spdc {

/// Photon fluxes reaching the two irises, before polarizers and detectors.
struct SourceRates {
  double pair = 0.0;        ///< pairs/s with both partners entering the irises
  double unpaired_a = 0.0;  ///< photons/s at A whose partner misses B
  double unpaired_b = 0.0;
};

inline SourceRates source_rates(const ApparatusConfig& cfg) {
  const auto spectra = spectral_acceptance(cfg.spectral);
  const auto& g = cfg.geometry;
  SourceRates r;
  r.pair = g.peak_pair_rate * angular_acceptance(g) * spectra.pair;
  const double single = g.peak_pair_rate * g.iris_factor * spectra.single();
  r.unpaired_a = std::max(0.0, single - r.pair);
  r.unpaired_b = r.unpaired_a;
  return r;
}

/// Pass/block probabilities for a pair's two photons. A removed polarizer
/// passes everything.
inline JointProbs analyzer_probs(const ApparatusConfig& cfg, double alpha_deg, double beta_deg) {
  const auto p = joint_outcome_probs(cfg.pair_state(), alpha_deg, beta_deg);
  if (cfg.polarizer_a_in && cfg.polarizer_b_in) return p;
  if (cfg.polarizer_a_in) return {p.tt + p.tr, 0.0, p.rt + p.rr, 0.0};
  if (cfg.polarizer_b_in) return {p.tt + p.rt, p.tr + p.rr, 0.0, 0.0};
  return {1.0, 0.0, 0.0, 0.0};
}

/// Mean count rates at the counter outputs for one setting.
struct ExpectedRates {
  double singles_a = 0.0;
  double singles_b = 0.0;
  double coinc = 0.0;
  double true_coinc = 0.0;        ///< pair contribution before counter losses
  double accidental_coinc = 0.0;  ///< uncorrelated contribution before counter losses
};

/// Analytic rates including non-paralyzable detector and counter dead time.
inline ExpectedRates expected_rates(const ApparatusConfig& cfg, double alpha_deg, double beta_deg) {
  const auto src = source_rates(cfg);
  const auto pr = analyzer_probs(cfg, alpha_deg, beta_deg);
  const double pass_a = pr.tt + pr.tr;
  const double pass_b = pr.tt + pr.rt;
  const auto& da = cfg.detector_a;
  const auto& db = cfg.detector_b;

  const double raw_a = da.efficiency * (src.pair + src.unpaired_a) * pass_a + da.background_rate + da.dark_rate;
  const double raw_b = db.efficiency * (src.pair + src.unpaired_b) * pass_b + db.background_rate + db.dark_rate;
  const double live_a = 1.0 / (1.0 + raw_a * da.dead_time_ns * 1e-9);
  const double live_b = 1.0 / (1.0 + raw_b * db.dead_time_ns * 1e-9);
  const double det_a = raw_a * live_a;
  const double det_b = raw_b * live_b;

  const double counter = cfg.circuit.output_pulse_width_ns * 1e-9;
  ExpectedRates out;
  out.singles_a = det_a / (1.0 + det_a * counter);
  out.singles_b = det_b / (1.0 + det_b * counter);
  out.true_coinc = da.efficiency * db.efficiency * src.pair * pr.tt * live_a * live_b;
  out.accidental_coinc = accidental_rate(det_a, det_b, cfg.circuit.input_pulse_width_ns);
  const double c = out.true_coinc + out.accidental_coinc;
  out.coinc = c / (1.0 + c * counter);
  return out;
}

/// Expected counts for one setting (no sampling noise).
inline CountRecord expected_setting(const ApparatusConfig& cfg, double alpha_deg, double beta_deg, double duration_s) {
  const auto r = expected_rates(cfg, alpha_deg, beta_deg);
  return {alpha_deg, beta_deg, duration_s, r.singles_a * duration_s, r.singles_b * duration_s, r.coinc * duration_s};
}

namespace detail {

inline double poisson_count(double mean, std::uint64_t seed) {
  if (!(mean > 0.0)) return 0.0;
  Rng rng(seed);
  return static_cast<double>(std::poisson_distribution<std::int64_t>(mean)(rng));
}

inline std::vector<double> merge_sorted(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> out;
  out.reserve(x.size() + y.size());
  std::merge(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
  return out;
}

inline std::vector<double> thin(const std::vector<double>& times, double keep, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution pass(std::clamp(keep, 0.0, 1.0));
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    if (pass(rng)) out.push_back(t);
  }
  return out;
}

}  // namespace detail

/// Simulates one polarizer setting.
///
/// Event mode follows every photon: Poisson pair and unpaired-photon
/// emission, analyzer outcomes drawn from the joint probabilities, detector
/// thinning with dark/background clicks and dead time, then the coincidence
/// circuit. Rate mode Poisson-samples the analytic expected counts. When
/// `trace` is given (event mode) it receives the clicks of both channels.
inline CountRecord run_setting(const ApparatusConfig& cfg, double alpha_deg, double beta_deg, double duration_s,
                               std::uint64_t seed, SimulationMode mode, std::vector<DetectionEvent>* trace = nullptr) {
  cfg.validate();
  if (!(duration_s > 0.0)) throw ConfigError("run_setting: duration must be positive");

  if (mode == SimulationMode::rate) {
    const auto mean = expected_setting(cfg, alpha_deg, beta_deg, duration_s);
    return {alpha_deg, beta_deg, duration_s, detail::poisson_count(mean.n_a, derive_seed(seed, 10)),
            detail::poisson_count(mean.n_b, derive_seed(seed, 11)), detail::poisson_count(mean.n_coinc, derive_seed(seed, 12))};
  }

  const auto src = source_rates(cfg);
  const auto pr = analyzer_probs(cfg, alpha_deg, beta_deg);

  const auto pairs = emit_pair_times(src.pair, duration_s, derive_seed(seed, 0));
  std::vector<double> pair_a, pair_b;
  {
    Rng rng(derive_seed(seed, 1));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double c_tt = pr.tt, c_tr = pr.tt + pr.tr, c_rt = c_tr + pr.rt;
    for (double t : pairs) {
      const double x = u(rng);
      if (x < c_tt) {
        pair_a.push_back(t);
        pair_b.push_back(t);
      } else if (x < c_tr) {
        pair_a.push_back(t);
      } else if (x < c_rt) {
        pair_b.push_back(t);
      }
    }
  }
  const auto lone_a = detail::thin(emit_pair_times(src.unpaired_a, duration_s, derive_seed(seed, 2)), pr.tt + pr.tr,
                                   derive_seed(seed, 3));
  const auto lone_b = detail::thin(emit_pair_times(src.unpaired_b, duration_s, derive_seed(seed, 4)), pr.tt + pr.rt,
                                   derive_seed(seed, 5));

  const auto arrivals_a = detail::merge_sorted(pair_a, lone_a);
  const auto arrivals_b = detail::merge_sorted(pair_b, lone_b);
  const auto clicks_a = detect(arrivals_a, Channel::a, cfg.detector_a, duration_s, derive_seed(seed, 6));
  const auto clicks_b = detect(arrivals_b, Channel::b, cfg.detector_b, duration_s, derive_seed(seed, 7));
  const auto out = coincidence_circuit(clicks_a, clicks_b, cfg.circuit);

  if (trace) {
    trace->clear();
    trace->reserve(clicks_a.size() + clicks_b.size());
    std::merge(clicks_a.begin(), clicks_a.end(), clicks_b.begin(), clicks_b.end(), std::back_inserter(*trace),
               [](const DetectionEvent& x, const DetectionEvent& y) { return x.time_s < y.time_s; });
  }
  return {alpha_deg, beta_deg, duration_s, static_cast<double>(out.count_a), static_cast<double>(out.count_b),
          static_cast<double>(out.count_coinc)};
}

/// Seed of the setting with the given index within a protocol run.
inline std::uint64_t setting_seed(std::uint64_t base, std::uint64_t index) noexcept { return base ^ index; }

// ---------------------------------------------------------------------------

struct ChshRun {
  ChshResult result;                 ///< analysis of `raw` (or of the corrected records)
  std::vector<CountRecord> raw;      ///< sixteen measured records, canonical order
  bool accidentals_subtracted = false;
  double sigma_s_replicated = 0.0;   ///< spread of S over Poisson replicas; NaN if not computed
  double total_time_s = 0.0;
};

inline ChshRun run_chsh(const ApparatusConfig& cfg, SimulationMode mode, std::vector<DetectionEvent>* trace = nullptr) {
  cfg.validate();
  const auto& p = cfg.protocol;
  ChshRun run;
  const auto angles = chsh_setting_angles(p.chsh_angles);
  run.raw.reserve(angles.size());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    run.raw.push_back(run_setting(cfg, angles[i].alpha_deg, angles[i].beta_deg, p.duration_s, setting_seed(p.seed, i), mode,
                                  i == 0 ? trace : nullptr));
    run.total_time_s += p.duration_s;
  }
  std::vector<CountRecord> analysed = run.raw;
  if (p.subtract_accidentals) {
    for (auto& r : analysed) r = subtract_accidentals(r, cfg.circuit.input_pulse_width_ns);
    run.accidentals_subtracted = true;
  }
  run.result = chsh_S(p.chsh_angles, analysed);
  run.sigma_s_replicated = p.replicas >= 2 ? replicate_sigma_S(run.result, p.replicas, derive_seed(p.seed, 1000))
                                           : std::numeric_limits<double>::quiet_NaN();
  return run;
}

/// CHSH evaluation of already measured records (e.g. read from CSV).
inline ChshRun analyse_chsh(std::span<const CountRecord> records, const ApparatusConfig& cfg) {
  ChshRun run;
  run.raw.assign(records.begin(), records.end());
  const auto settings = infer_chsh_settings(records);
  std::vector<CountRecord> analysed = run.raw;
  if (cfg.protocol.subtract_accidentals) {
    for (auto& r : analysed) r = subtract_accidentals(r, cfg.circuit.input_pulse_width_ns);
    run.accidentals_subtracted = true;
  }
  run.result = chsh_S(settings, analysed);
  for (const auto& r : records) run.total_time_s += r.duration_s;
  run.sigma_s_replicated = cfg.protocol.replicas >= 2
                               ? replicate_sigma_S(run.result, cfg.protocol.replicas, derive_seed(cfg.protocol.seed, 1000))
                               : std::numeric_limits<double>::quiet_NaN();
  return run;
}

inline ResultDocument chsh_document(const ChshRun& run) {
  ResultDocument doc;
  const auto& r = run.result;
  doc.add("protocol", "chsh");
  doc.add("S", r.s);
  doc.add("sigma_S", r.sigma_s);
  doc.add("sigma_S_replicated", run.sigma_s_replicated);
  doc.add("E_ab", r.e_values[0]);
  doc.add("E_abp", r.e_values[1]);
  doc.add("E_apb", r.e_values[2]);
  doc.add("E_apbp", r.e_values[3]);
  doc.add("a_deg", r.settings.a);
  doc.add("ap_deg", r.settings.a_prime);
  doc.add("b_deg", r.settings.b);
  doc.add("bp_deg", r.settings.b_prime);
  doc.add("accidentals_subtracted", std::string(run.accidentals_subtracted ? "true" : "false"));
  doc.add("total_time_s", run.total_time_s);
  return doc;
}

// ---------------------------------------------------------------------------

struct AngleScanPoint {
  double theta_a_deg = 0.0;
  double theta_b_deg = 0.0;
  CountRecord record;  ///< polarizer angles are zero; both polarizers removed
};

/// Coincidence and singles counts over the detector-rail grid, polarizers removed.
inline std::vector<AngleScanPoint> run_anglescan(const ApparatusConfig& cfg, SimulationMode mode) {
  cfg.validate();
  const auto& p = cfg.protocol;
  std::vector<AngleScanPoint> out;
  std::uint64_t index = 0;
  for (double ta : p.anglescan_theta_a_deg) {
    for (double tb : p.anglescan_theta_b_deg) {
      ApparatusConfig c = cfg;
      c.geometry.theta_a_deg = ta;
      c.geometry.theta_b_deg = tb;
      c.polarizer_a_in = false;
      c.polarizer_b_in = false;
      out.push_back({ta, tb, run_setting(c, 0.0, 0.0, p.duration_s, setting_seed(p.seed, index++), mode)});
    }
  }
  return out;
}

inline void write_anglescan_csv(std::ostream& os, std::span<const AngleScanPoint> points) {
  std::vector<CountRecord> rows;
  rows.reserve(points.size());
  for (const auto& pt : points) {
    CountRecord r = pt.record;
    r.alpha_deg = pt.theta_a_deg;
    r.beta_deg = pt.theta_b_deg;
    rows.push_back(r);
  }
  write_count_records(os, rows, kAngleScanColumns);
}

/// Whitespace-separated layout for plotting: one row per theta_B, one
/// coincidence-rate column per theta_A, then the channel-B singles rate
/// (averaged over theta_A).
inline void write_anglescan_curves(std::ostream& os, std::span<const AngleScanPoint> points) {
  std::vector<double> ta, tb;
  for (const auto& pt : points) {
    if (std::find(ta.begin(), ta.end(), pt.theta_a_deg) == ta.end()) ta.push_back(pt.theta_a_deg);
    if (std::find(tb.begin(), tb.end(), pt.theta_b_deg) == tb.end()) tb.push_back(pt.theta_b_deg);
  }
  os << "# theta_B_deg";
  for (double a : ta) os << " coinc_cps_thetaA_" << format_number(a);
  os << " singles_B_cps\n";
  for (double b : tb) {
    os << format_number(b);
    double singles = 0.0;
    int n = 0;
    for (double a : ta) {
      const auto it = std::find_if(points.begin(), points.end(),
                                   [&](const AngleScanPoint& pt) { return pt.theta_a_deg == a && pt.theta_b_deg == b; });
      if (it == points.end()) {
        os << " nan";
        continue;
      }
      os << ' ' << format_number(it->record.coinc_rate());
      singles += it->record.n_b / it->record.duration_s;
      ++n;
    }
    os << ' ' << format_number(n ? singles / n : 0.0) << '\n';
  }
}

// ---------------------------------------------------------------------------

struct PolScanRun {
  std::vector<CountRecord> records;
  FitResult fit;
  double visibility = 0.0;
};

inline FitConfig fit_config_from(const ApparatusConfig& cfg) {
  FitConfig f;
  f.state = cfg.pair_state();
  f.free_theta = cfg.protocol.fit_free_theta;
  f.free_phi = cfg.protocol.fit_free_phi;
  f.free_purity = cfg.protocol.fit_free_purity;
  f.simplex.seed = derive_seed(cfg.protocol.seed, 2000);
  return f;
}

inline PolScanRun analyse_polscan(std::vector<CountRecord> records, const ApparatusConfig& cfg) {
  PolScanRun run;
  run.records = std::move(records);
  run.fit = fit_coincidence_curve(run.records, fit_config_from(cfg));
  run.visibility = visibility(run.fit);
  return run;
}

/// Scans polarizer B at the configured polarizer-A angle, then fits the curve.
inline PolScanRun run_polscan(const ApparatusConfig& cfg, SimulationMode mode, std::vector<DetectionEvent>* trace = nullptr) {
  cfg.validate();
  const auto& p = cfg.protocol;
  std::vector<CountRecord> records;
  for (std::size_t i = 0; i < p.polscan_beta_deg.size(); ++i) {
    records.push_back(run_setting(cfg, cfg.polarizer_a_deg, p.polscan_beta_deg[i], p.duration_s, setting_seed(p.seed, i), mode,
                                  i == 0 ? trace : nullptr));
  }
  return analyse_polscan(std::move(records), cfg);
}

inline ResultDocument polscan_document(const PolScanRun& run) {
  ResultDocument doc;
  const auto& f = run.fit;
  doc.add("protocol", "polscan");
  doc.add("alpha_deg", f.alpha_deg);
  doc.add("fitted_pair_rate", f.pair_rate);
  doc.add("fitted_pair_rate_sigma", f.pair_rate_sigma);
  doc.add("fitted_background", f.background);
  doc.add("fitted_background_sigma", f.background_sigma);
  doc.add("fitted_theta_l_deg", f.state.theta_l_deg);
  doc.add("fitted_phi_rad", f.state.phi_rad);
  doc.add("fitted_purity", f.state.purity);
  doc.add("visibility", run.visibility);
  doc.add("residual", f.residual);
  doc.add("dof", static_cast<double>(f.dof));
  doc.add("evaluations", static_cast<double>(f.evaluations));
  doc.add("converged", std::string(f.converged ? "true" : "false"));
  return doc;
}

/// The scan records with the fitted rate and expected counts appended.
inline void write_polscan_annotated(std::ostream& os, const PolScanRun& run) {
  os << kPolarizerColumns << ",fit_rate_cps,fit_counts\n";
  for (const auto& r : run.records) {
    const double rate = run.fit.rate(r.beta_deg);
    os << format_number(r.alpha_deg) << ',' << format_number(r.beta_deg) << ',' << format_number(r.duration_s) << ','
       << format_number(r.n_a) << ',' << format_number(r.n_b) << ',' << format_number(r.n_coinc) << ','
       << format_number(rate) << ',' << format_number(rate * r.duration_s) << '\n';
  }
}

// ---------------------------------------------------------------------------

struct WindowPoint {
  double dt_ns = 0.0;  ///< t_B - t_A
  bool coincident = false;
};

/// Feeds single A/B click pairs with controlled separation through the
/// circuit and records whether each registers a coincidence.
inline std::vector<WindowPoint> circuit_window_map(const CircuitParams& params, double dt_min_ns, double dt_max_ns,
                                                   double step_ns) {
  params.validate();
  if (!(step_ns > 0.0) || dt_max_ns < dt_min_ns) throw std::invalid_argument("circuit_window_map: bad sweep");
  constexpr double kT0 = 1e-6;
  std::vector<WindowPoint> out;
  const auto n = static_cast<long>(std::floor((dt_max_ns - dt_min_ns) / step_ns + 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double dt = dt_min_ns + static_cast<double>(i) * step_ns;
    const DetectionEvent a{kT0, Channel::a, Origin::pair};
    const DetectionEvent b{kT0 + dt * 1e-9, Channel::b, Origin::pair};
    const auto res = coincidence_circuit(std::span(&a, 1), std::span(&b, 1), params);
    out.push_back({dt, res.count_coinc == 1});
  }
  return out;
}

inline void write_window_map(std::ostream& os, std::span<const WindowPoint> map) {
  os << "dt_ns,coincidence\n";
  for (const auto& p : map) os << format_number(p.dt_ns) << ',' << (p.coincident ? 1 : 0) << '\n';
}

}  // namespace spdc
