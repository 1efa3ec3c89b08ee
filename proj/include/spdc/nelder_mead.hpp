#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "spdc/random.hpp"

namespace spdc {

struct SimplexOptions {
  double initial_step = 0.1;  ///< in the caller's scaled coordinates
  double tolerance = 1e-6;    ///< simplex diameter at which a descent stops
  int max_evaluations = 10000;
  int restarts = 3;
  std::uint64_t seed = 0;
};

struct SimplexResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
  /// Best objective after each descent (initial one plus restarts); never increases.
  std::vector<double> history;
};

/// Derivative-free minimization by Nelder-Mead simplex descent.
///
/// After the first descent the search is restarted `restarts` times from the
/// best point found so far, each time with a freshly randomized simplex. The
/// evaluation budget is shared by all descents.
template <typename Objective>
SimplexResult nelder_mead(Objective&& f, std::vector<double> start, const SimplexOptions& opt = {}) {
  const std::size_t n = start.size();
  SimplexResult best;
  best.x = start;
  if (n == 0) {
    best.value = f(start);
    best.evaluations = 1;
    best.converged = true;
    best.history.push_back(best.value);
    return best;
  }

  Rng rng(opt.seed);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  std::bernoulli_distribution flip(0.5);
  int evals = 0;
  // Past the budget a point is treated as infinitely bad without calling f.
  auto eval = [&](const std::vector<double>& x) {
    if (evals >= opt.max_evaluations) return std::numeric_limits<double>::infinity();
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  best.value = eval(start);

  for (int round = 0; round <= opt.restarts && evals < opt.max_evaluations; ++round) {
    std::vector<std::vector<double>> pts(n + 1, best.x);
    std::vector<double> vals(n + 1, best.value);
    for (std::size_t i = 0; i < n; ++i) {
      double step = opt.initial_step;
      if (round > 0) step *= jitter(rng) * (flip(rng) ? 1.0 : -1.0);
      pts[i + 1][i] += step;
      vals[i + 1] = eval(pts[i + 1]);
    }

    bool converged = false;
    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    while (evals < opt.max_evaluations) {
      for (std::size_t i = 0; i <= n; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
      const auto& lo = pts[order[0]];

      double diameter = 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) d2 += (pts[order[i]][k] - lo[k]) * (pts[order[i]][k] - lo[k]);
        diameter = std::max(diameter, std::sqrt(d2));
      }
      if (diameter < opt.tolerance) {
        converged = true;
        break;
      }

      const std::size_t hi = order[n];
      const std::size_t second = order[n - 1];
      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[order[i]][k] / static_cast<double>(n);
      }
      for (std::size_t k = 0; k < n; ++k) trial[k] = centroid[k] + (centroid[k] - pts[hi][k]);
      const double fr = eval(trial);

      if (fr < vals[order[0]]) {
        for (std::size_t k = 0; k < n; ++k) trial2[k] = centroid[k] + 2.0 * (centroid[k] - pts[hi][k]);
        const double fe = eval(trial2);
        if (fe < fr) {
          pts[hi] = trial2;
          vals[hi] = fe;
        } else {
          pts[hi] = trial;
          vals[hi] = fr;
        }
      } else if (fr < vals[second]) {
        pts[hi] = trial;
        vals[hi] = fr;
      } else {
        const bool outside = fr < vals[hi];
        for (std::size_t k = 0; k < n; ++k) {
          trial2[k] = outside ? centroid[k] + 0.5 * (trial[k] - centroid[k]) : centroid[k] + 0.5 * (pts[hi][k] - centroid[k]);
        }
        const double fc = eval(trial2);
        if (fc < std::min(fr, vals[hi])) {
          pts[hi] = trial2;
          vals[hi] = fc;
        } else {
          const std::size_t b = order[0];
          for (std::size_t i = 0; i <= n; ++i) {
            if (i == b) continue;
            for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[b][k] + 0.5 * (pts[i][k] - pts[b][k]);
            vals[i] = eval(pts[i]);
          }
        }
      }
    }

    const auto it = std::min_element(vals.begin(), vals.end());
    if (*it < best.value) {
      best.value = *it;
      best.x = pts[static_cast<std::size_t>(it - vals.begin())];
    }
    best.converged = converged;
    best.history.push_back(best.value);
  }
  best.evaluations = evals;
  return best;
}

}  // namespace spdc
