// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference computations used by unit and acceptance tests.

#pragma once

#include <cmath>
#include <numbers>

namespace reunite::oracle {

inline double normal_pdf(double x, double mu, double var) {
  return std::exp(-(x - mu) * (x - mu) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Bhattacharyya coefficient of two 1-D Gaussians by the trapezoid rule.
inline double bhattacharyya_coefficient(double mu1, double var1, double mu2, double var2, double lo = -50.0,
                                        double hi = 50.0, double step = 1e-3) {
  const auto n = static_cast<long>(std::llround((hi - lo) / step));
  auto f = [&](double x) { return std::sqrt(normal_pdf(x, mu1, var1) * normal_pdf(x, mu2, var2)); };
  double acc = 0.5 * (f(lo) + f(hi));
  for (long i = 1; i < n; ++i) acc += f(lo + double(i) * step);
  return acc * step;
}

/// Empirical SNR (dB) of `noisy` against the best-scaled copy of `clean`.
template <typename A, typename B>
double projected_snr_db(const A& clean, const B& noisy) {
  double cc = 0.0, cn = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    cc += double(clean[i]) * double(clean[i]);
    cn += double(clean[i]) * double(noisy[i]);
  }
  const double g = cn / cc;
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double s = g * double(clean[i]);
    const double r = double(noisy[i]) - s;
    ps += s * s;
    pn += r * r;
  }
  return 10.0 * std::log10(ps / pn);
}

}  // namespace reunite::oracle
