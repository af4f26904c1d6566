// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "reunite/error.hpp"
#include "reunite/types.hpp"

namespace reunite {

inline constexpr double kVarFloor = 1e-6;

struct VisualConfig {
  double sigma0 = 0.05;          // stress std at separation day 0
  double kappa_per_day = 0.02;   // stress std growth per day
  double query_var = 0.0025;     // variance given to a single query point
};

/// sigma_stress(d) = sigma0 + kappa * d.
inline double stress_sigma(double days, const VisualConfig& cfg = {}) {
  return cfg.sigma0 + cfg.kappa_per_day * std::max(days, 0.0);
}

/// Re-derives `var` from the stored sample variance for a new separation time.
inline GaussianAppearance inflate(GaussianAppearance g, double days, const VisualConfig& cfg = {}) {
  const double s = stress_sigma(days, cfg);
  g.var.resize(g.sample_var.size());
  for (std::size_t i = 0; i < g.sample_var.size(); ++i) {
    g.var[i] = std::max(g.sample_var[i] + s * s, kVarFloor);
  }
  g.inflated_for_days = days;
  return g;
}

/// Sample mean and population variance of the observations, inflated by the
/// stress variance for `days_separated`.
inline GaussianAppearance fit_appearance(std::span<const VisualFeature> observations,
                                         double days_separated, const VisualConfig& cfg = {}) {
  if (observations.empty()) throw Error(ErrorCode::EmptyObservations, "no visual observation to fit");
  const std::size_t dim = observations.front().values.size();
  for (const auto& o : observations) {
    if (o.values.size() != dim) throw Error(ErrorCode::DimensionMismatch, "visual observations differ in length");
  }
  const double n = double(observations.size());
  GaussianAppearance g;
  g.n_obs = int(observations.size());
  g.mean.assign(dim, 0.0);
  g.sample_var.assign(dim, 0.0);
  for (const auto& o : observations) {
    for (std::size_t i = 0; i < dim; ++i) g.mean[i] += o.values[i];
  }
  for (auto& m : g.mean) m /= n;
  for (const auto& o : observations) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = o.values[i] - g.mean[i];
      g.sample_var[i] += d * d;
    }
  }
  for (auto& v : g.sample_var) v /= n;
  return inflate(std::move(g), days_separated, cfg);
}

/// Closed-form Bhattacharyya distance between diagonal Gaussians.
inline double bhattacharyya_distance(const GaussianAppearance& p, const GaussianAppearance& q) {
  const std::size_t dim = p.mean.size();
  if (q.mean.size() != dim || p.var.size() != dim || q.var.size() != dim) {
    throw Error(ErrorCode::DimensionMismatch, "appearance dimensionality differs");
  }
  double mahal = 0.0, logdet = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double avg = 0.5 * (p.var[i] + q.var[i]);
    const double d = p.mean[i] - q.mean[i];
    mahal += d * d / avg;
    logdet += std::log(avg / std::sqrt(p.var[i] * q.var[i]));
  }
  return std::max(0.0, mahal / 8.0 + logdet / 2.0);
}

/// A query point as a Gaussian with the configured query variance.
inline GaussianAppearance point_gaussian(const VisualFeature& x, const VisualConfig& cfg = {}) {
  GaussianAppearance g;
  g.mean = x.values;
  g.sample_var.assign(x.values.size(), 0.0);
  g.var.assign(x.values.size(), std::max(cfg.query_var, kVarFloor));
  return g;
}

/// exp(-D_B) between the promoted query point and the identity Gaussian.
inline double visual_similarity(const VisualFeature& query, const GaussianAppearance& g,
                                const VisualConfig& cfg = {}) {
  if (query.values.size() != g.mean.size()) {
    throw Error(ErrorCode::DimensionMismatch, "query and appearance dimensionality differ");
  }
  return std::exp(-bhattacharyya_distance(point_gaussian(query, cfg), g));
}

}  // namespace reunite
