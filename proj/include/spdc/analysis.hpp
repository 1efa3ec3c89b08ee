#pragma once

// Count records to physics results: correlation values, the CHSH
// combination with Poisson error propagation, accidental subtraction,
// coincidence-curve fitting and fringe visibility.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdc/error.hpp"
#include "spdc/nelder_mead.hpp"
#include "spdc/quantum_model.hpp"
#include "spdc/random.hpp"

namespace spdc {

/// Counts for one polarizer setting. Counts are stored as doubles so that
/// expectation values and accidental-corrected counts share the type.
struct CountRecord {
  double alpha_deg = 0.0;
  double beta_deg = 0.0;
  double duration_s = 1.0;
  double n_a = 0.0;
  double n_b = 0.0;
  double n_coinc = 0.0;

  double coinc_rate() const noexcept { return n_coinc / duration_s; }

  friend bool operator==(const CountRecord&, const CountRecord&) = default;
};

/// True when two polarizer angles describe the same analyzer orientation.
inline bool same_orientation(double x_deg, double y_deg, double tol = 1e-9) noexcept {
  const double d = wrap(x_deg - y_deg, 180.0);
  return d < tol || 180.0 - d < tol;
}

/// Analyzer angles of a CHSH run. The sign convention is
/// S = E(a,b) - E(a,b') + E(a',b) + E(a',b').
struct ChshSettings {
  double a = 0.0;
  double a_prime = 45.0;
  double b = 22.5;
  double b_prime = 67.5;

  friend bool operator==(const ChshSettings&, const ChshSettings&) = default;
};

struct AnglePair {
  double alpha_deg;
  double beta_deg;
};

/// The four settings of one correlation block: (x,y), (x,y+90), (x+90,y), (x+90,y+90).
inline std::array<AnglePair, 4> block_angles(double alpha_deg, double beta_deg) {
  return {{{alpha_deg, beta_deg},
           {alpha_deg, beta_deg + 90.0},
           {alpha_deg + 90.0, beta_deg},
           {alpha_deg + 90.0, beta_deg + 90.0}}};
}

/// All sixteen settings, block by block in the order (a,b), (a,b'), (a',b), (a',b').
inline std::array<AnglePair, 16> chsh_setting_angles(const ChshSettings& s) {
  std::array<AnglePair, 16> out{};
  const std::array<AnglePair, 4> bases = {{{s.a, s.b}, {s.a, s.b_prime}, {s.a_prime, s.b}, {s.a_prime, s.b_prime}}};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto blk = block_angles(bases[k].alpha_deg, bases[k].beta_deg);
    std::copy(blk.begin(), blk.end(), out.begin() + static_cast<std::ptrdiff_t>(4 * k));
  }
  return out;
}

namespace detail {

inline void check_block(std::span<const CountRecord, 4> r) {
  const auto want = block_angles(r[0].alpha_deg, r[0].beta_deg);
  for (std::size_t i = 1; i < 4; ++i) {
    if (!same_orientation(r[i].alpha_deg, want[i].alpha_deg) || !same_orientation(r[i].beta_deg, want[i].beta_deg)) {
      throw AnalysisError("correlation block: record " + std::to_string(i) + " is not the expected complement setting");
    }
  }
  for (const auto& rec : r) {
    if (!(rec.duration_s > 0.0)) throw AnalysisError("correlation block: non-positive duration");
    if (rec.n_coinc < 0.0) throw AnalysisError("correlation block: negative coincidence count");
  }
}

inline constexpr std::array<double, 4> kBlockSigns = {1.0, -1.0, -1.0, 1.0};

}  // namespace detail

/// Correlation value from the four complement settings of one block.
/// Counts are normalized to rates, so unequal durations are allowed.
inline double correlation_E(std::span<const CountRecord, 4> records) {
  detail::check_block(records);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double r = records[i].coinc_rate();
    num += detail::kBlockSigns[i] * r;
    den += r;
  }
  if (!(den > 0.0)) throw AnalysisError("correlation block: no coincidences, correlation undefined");
  return num / den;
}

inline double correlation_E(const std::array<CountRecord, 4>& records) {
  return correlation_E(std::span<const CountRecord, 4>(records));
}

/// First-order Poisson variance of one block's correlation value.
inline double correlation_variance(std::span<const CountRecord, 4> records) {
  detail::check_block(records);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double r = records[i].coinc_rate();
    num += detail::kBlockSigns[i] * r;
    den += r;
  }
  if (!(den > 0.0)) throw AnalysisError("correlation block: no coincidences, variance undefined");
  double var = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double d_rate = (detail::kBlockSigns[i] * den - num) / (den * den);
    const double t = records[i].duration_s;
    var += d_rate * d_rate * records[i].n_coinc / (t * t);
  }
  return var;
}

struct ChshResult {
  ChshSettings settings;
  /// E(a,b), E(a,b'), E(a',b), E(a',b').
  std::array<double, 4> e_values{};
  double s = 0.0;
  double sigma_s = 0.0;
  /// The sixteen records in canonical order (see chsh_setting_angles).
  std::vector<CountRecord> counts;
};

namespace detail {

inline std::vector<CountRecord> arrange_chsh(const ChshSettings& s, std::span<const CountRecord> records) {
  if (records.size() != 16) {
    throw AnalysisError("CHSH: expected 16 count records, got " + std::to_string(records.size()));
  }
  std::vector<CountRecord> ordered;
  ordered.reserve(16);
  for (const auto& want : chsh_setting_angles(s)) {
    const CountRecord* found = nullptr;
    for (const auto& r : records) {
      if (same_orientation(r.alpha_deg, want.alpha_deg) && same_orientation(r.beta_deg, want.beta_deg)) {
        if (found) throw AnalysisError("CHSH: duplicate record for one setting");
        found = &r;
      }
    }
    if (!found) {
      throw AnalysisError("CHSH: no record for setting (" + std::to_string(want.alpha_deg) + ", " +
                          std::to_string(want.beta_deg) + ")");
    }
    ordered.push_back(*found);
  }
  return ordered;
}

}  // namespace detail

/// Reads the analyzer angles off sixteen records stored in canonical order.
inline ChshSettings infer_chsh_settings(std::span<const CountRecord> records) {
  if (records.size() != 16) {
    throw AnalysisError("CHSH: expected 16 count records, got " + std::to_string(records.size()));
  }
  return {records[0].alpha_deg, records[8].alpha_deg, records[0].beta_deg, records[4].beta_deg};
}

/// Propagated standard deviation of S, treating each coincidence count as
/// Poisson with variance equal to the count.
inline double propagate_sigma_S(const ChshSettings& settings, std::span<const CountRecord> records) {
  const auto ordered = detail::arrange_chsh(settings, records);
  double var = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    var += correlation_variance(std::span<const CountRecord, 4>(ordered.data() + 4 * k, 4));
  }
  return std::sqrt(var);
}

inline double propagate_sigma_S(std::span<const CountRecord> records) {
  return propagate_sigma_S(infer_chsh_settings(records), records);
}

inline ChshResult chsh_S(const ChshSettings& settings, std::span<const CountRecord> records) {
  ChshResult out;
  out.settings = settings;
  out.counts = detail::arrange_chsh(settings, records);
  for (std::size_t k = 0; k < 4; ++k) {
    out.e_values[k] = correlation_E(std::span<const CountRecord, 4>(out.counts.data() + 4 * k, 4));
  }
  out.s = out.e_values[0] - out.e_values[1] + out.e_values[2] + out.e_values[3];
  out.sigma_s = propagate_sigma_S(settings, out.counts);
  return out;
}

/// CHSH evaluation of sixteen records given in canonical order.
inline ChshResult chsh_S(std::span<const CountRecord> records) {
  return chsh_S(infer_chsh_settings(records), records);
}

/// Spread of S over parametric Poisson replicas of the measured coincidence
/// counts. Replicas with an empty block are skipped.
inline double replicate_sigma_S(const ChshResult& result, int replicas, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CountRecord> copy = result.counts;
  double sum = 0.0, sum2 = 0.0;
  int used = 0;
  for (int rep = 0; rep < replicas; ++rep) {
    for (std::size_t i = 0; i < copy.size(); ++i) {
      const double mean = result.counts[i].n_coinc;
      copy[i].n_coinc = mean > 0.0 ? static_cast<double>(std::poisson_distribution<std::int64_t>(mean)(rng)) : 0.0;
    }
    try {
      const auto r = chsh_S(result.settings, copy);
      sum += r.s;
      sum2 += r.s * r.s;
      ++used;
    } catch (const AnalysisError&) {
    }
  }
  if (used < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mean = sum / used;
  return std::sqrt(std::max(0.0, (sum2 - used * mean * mean) / (used - 1)));
}

/// Removes the expected accidental coincidences R_A R_B tau, floored at zero.
inline CountRecord subtract_accidentals(const CountRecord& record, double window_ns) {
  if (!(record.duration_s > 0.0)) throw AnalysisError("subtract_accidentals: non-positive duration");
  CountRecord out = record;
  const double expected = record.n_a * record.n_b / record.duration_s * window_ns * 1e-9;
  out.n_coinc = std::max(0.0, record.n_coinc - expected);
  return out;
}

// ---------------------------------------------------------------------------
// Coincidence-curve fit

struct FitConfig {
  PairState state;  ///< initial guess, and the held values of non-free parameters
  bool free_theta = false;
  bool free_phi = false;
  bool free_purity = false;
  std::optional<double> initial_pair_rate;
  std::optional<double> initial_background;
  SimplexOptions simplex;
};

struct FitResult {
  double alpha_deg = 0.0;
  double pair_rate = 0.0;  ///< coincidence rate per unit P_tt, cps
  double pair_rate_sigma = std::numeric_limits<double>::quiet_NaN();
  double background = 0.0;  ///< constant coincidence rate, cps
  double background_sigma = std::numeric_limits<double>::quiet_NaN();
  PairState state;
  double residual = 0.0;  ///< weighted sum of squares at the optimum
  int dof = 0;
  int evaluations = 0;
  bool converged = false;

  double rate(double beta_deg) const { return pair_rate * coincidence_probability(state, alpha_deg, beta_deg) + background; }
};

namespace detail {

struct Sinusoid {
  double mean;
  double amplitude;
  double max() const { return mean + amplitude; }
  double min() const { return mean - amplitude; }
};

// Any function of the form m + u cos(2x) + v sin(2x), recovered from three samples.
template <typename F>
Sinusoid sinusoid_from_samples(F&& f) {
  const double f0 = f(0.0), f45 = f(45.0), f90 = f(90.0);
  const double m = 0.5 * (f0 + f90);
  return {m, std::hypot(0.5 * (f0 - f90), f45 - m)};
}

}  // namespace detail

/// Weighted least-squares fit of N(beta)/T = R P_tt(alpha, beta) + C to a
/// polarizer scan at fixed alpha. Weights are inverse Poisson variances with
/// a variance floor of one count.
inline FitResult fit_coincidence_curve(std::span<const CountRecord> records, const FitConfig& cfg = {}) {
  if (records.size() < 6) throw AnalysisError("fit: need at least 6 records, got " + std::to_string(records.size()));
  const double alpha = records.front().alpha_deg;
  double bmin = records.front().beta_deg, bmax = bmin;
  for (const auto& r : records) {
    if (!same_orientation(r.alpha_deg, alpha)) throw AnalysisError("fit: records do not share one alpha");
    if (!(r.duration_s > 0.0)) throw AnalysisError("fit: non-positive duration");
    bmin = std::min(bmin, r.beta_deg);
    bmax = std::max(bmax, r.beta_deg);
  }
  if (bmax - bmin < 180.0 - 1e-9) throw AnalysisError("fit: beta values must span at least 180 degrees");

  double rmin = std::numeric_limits<double>::infinity(), rmax = -rmin;
  for (const auto& r : records) {
    rmin = std::min(rmin, r.coinc_rate());
    rmax = std::max(rmax, r.coinc_rate());
  }
  if (!(rmax - rmin > 1e-12 * std::max(1.0, std::abs(rmax)))) {
    throw DegenerateFitError("fit: flat coincidence curve, pair rate unidentifiable");
  }

  const auto shape = detail::sinusoid_from_samples([&](double b) { return coincidence_probability(cfg.state, alpha, b); });
  double r0 = cfg.initial_pair_rate.value_or(shape.amplitude > 1e-9 ? (rmax - rmin) / (2.0 * shape.amplitude) : rmax);
  double c0 = cfg.initial_background.value_or(std::max(0.0, rmin - r0 * shape.min()));

  // Parameter layout: R, C, then the freed state parameters.
  enum Kind { kRate, kBackground, kTheta, kPhi, kPurity };
  std::vector<Kind> kinds = {kRate, kBackground};
  if (cfg.free_theta) kinds.push_back(kTheta);
  if (cfg.free_phi) kinds.push_back(kPhi);
  if (cfg.free_purity) kinds.push_back(kPurity);
  const double rate_scale = std::max(std::abs(r0), 1.0);
  std::vector<double> scale, start;
  for (Kind k : kinds) {
    switch (k) {
      case kRate: scale.push_back(rate_scale); start.push_back(r0); break;
      case kBackground: scale.push_back(rate_scale); start.push_back(c0); break;
      case kTheta: scale.push_back(45.0); start.push_back(cfg.state.theta_l_deg); break;
      case kPhi: scale.push_back(1.0); start.push_back(cfg.state.phi_rad); break;
      case kPurity: scale.push_back(1.0); start.push_back(cfg.state.purity); break;
    }
  }
  for (std::size_t i = 0; i < start.size(); ++i) start[i] /= scale[i];

  struct Unpacked {
    double rate, background;
    PairState state;
    double penalty;
  };
  auto unpack = [&](const std::vector<double>& params) {
    Unpacked u{0.0, 0.0, cfg.state, 0.0};
    double theta = cfg.state.theta_l_deg, phi = cfg.state.phi_rad, purity = cfg.state.purity;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      switch (kinds[i]) {
        case kRate: u.rate = params[i]; break;
        case kBackground: u.background = params[i]; break;
        case kTheta: theta = params[i]; break;
        case kPhi: phi = params[i]; break;
        case kPurity: purity = params[i]; break;
      }
    }
    const double theta_c = std::clamp(theta, 0.0, 90.0);
    const double purity_c = std::clamp(purity, 0.0, 1.0);
    u.penalty = (theta - theta_c) / 45.0 * (theta - theta_c) / 45.0 + (purity - purity_c) * (purity - purity_c);
    u.state = PairState(theta_c, phi, purity_c);
    return u;
  };

  auto expected_counts = [&](const Unpacked& u, const CountRecord& r) {
    return r.duration_s * (u.rate * coincidence_probability(u.state, alpha, r.beta_deg) + u.background);
  };
  auto chi2_of = [&](const Unpacked& u) {
    double chi2 = 0.0;
    for (const auto& r : records) {
      const double d = r.n_coinc - expected_counts(u, r);
      chi2 += d * d / std::max(r.n_coinc, 1.0);
    }
    return chi2;
  };

  auto objective = [&](const std::vector<double>& x) {
    std::vector<double> p(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) p[i] = x[i] * scale[i];
    const auto u = unpack(p);
    const double chi2 = chi2_of(u);
    return chi2 + 1e3 * (1.0 + chi2) * u.penalty;
  };

  const auto best = nelder_mead(objective, start, cfg.simplex);

  std::vector<double> p(best.x.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = best.x[i] * scale[i];
  const auto u = unpack(p);

  FitResult out;
  out.alpha_deg = alpha;
  out.pair_rate = u.rate;
  out.background = u.background;
  out.state = u.state;
  out.residual = chi2_of(u);
  out.dof = static_cast<int>(records.size()) - static_cast<int>(kinds.size());
  out.evaluations = best.evaluations;
  out.converged = best.converged;

  // Covariance (J^T W J)^-1 from a central-difference Jacobian.
  const auto k = static_cast<Eigen::Index>(p.size());
  const auto m = static_cast<Eigen::Index>(records.size());
  Eigen::MatrixXd jac(m, k);
  Eigen::VectorXd w(m);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double h = 1e-6 * scale[static_cast<std::size_t>(j)];
    auto plus = p, minus = p;
    plus[static_cast<std::size_t>(j)] += h;
    minus[static_cast<std::size_t>(j)] -= h;
    const auto up = unpack(plus), um = unpack(minus);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& r = records[static_cast<std::size_t>(i)];
      jac(i, j) = (expected_counts(up, r) - expected_counts(um, r)) / (2.0 * h);
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) w(i) = 1.0 / std::max(records[static_cast<std::size_t>(i)].n_coinc, 1.0);
  const Eigen::MatrixXd info = jac.transpose() * w.asDiagonal() * jac;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  if (eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 1e-12 * eig.eigenvalues().maxCoeff()) {
    const Eigen::MatrixXd cov =
        eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    out.pair_rate_sigma = std::sqrt(cov(0, 0));
    out.background_sigma = std::sqrt(cov(1, 1));
  }
  return out;
}

/// Fringe visibility (max - min)/(max + min) of the fitted curve over all beta.
/// Negative fitted rates are floored at zero.
inline double visibility(const FitResult& fit) {
  const auto curve = detail::sinusoid_from_samples([&](double b) { return fit.rate(b); });
  const double hi = std::max(curve.max(), 0.0);
  const double lo = std::max(curve.min(), 0.0);
  if (!(hi + lo > 0.0)) throw AnalysisError("visibility: fitted curve is identically zero");
  return (hi - lo) / (hi + lo);
}

inline double visibility(std::span<const CountRecord> records, const FitConfig& cfg = {}) {
  return visibility(fit_coincidence_curve(records, cfg));
}

}  // namespace spdc
