// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <map>

#include "reunite/config.hpp"
#include "reunite/error.hpp"
#include "reunite/types.hpp"

namespace reunite {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr Timestamp kClockSkewToleranceS = 60;

/// Linear per-modality reliability decay.
struct DecayConfig {
  std::map<Modality, double> lambda_per_day{
      {Modality::Visual, 0.05}, {Modality::Acoustic, 0.01}, {Modality::Context, 0.2}};
  double floor = 0.1;

  double lambda(Modality m) const {
    auto it = lambda_per_day.find(m);
    return it == lambda_per_day.end() ? 0.0 : it->second;
  }

  void validate() const {
    for (const auto& [m, l] : lambda_per_day) {
      if (!(l >= 0.0)) throw Error(ErrorCode::InvalidConfig, "negative decay rate for " + std::string(to_string(m)));
    }
    if (!(floor >= 0.0 && floor < 1.0)) throw Error(ErrorCode::InvalidConfig, "decay floor outside [0,1)");
  }

  /// Reads `decay.visual`, `decay.acoustic`, `decay.context`, `decay.floor`.
  void apply(const KeyValueFile& kv) {
    for (auto m : kAllModalities) kv.get("decay." + std::string(to_string(m)), lambda_per_day[m]);
    kv.get("decay.floor", floor);
    validate();
  }
};

/// clamp(1 - lambda_m * days, floor, 1).
inline double reliability(Modality m, double days_separated, const DecayConfig& cfg = {}) {
  if (days_separated < 0.0) throw Error(ErrorCode::NegativeDuration, "separation time is negative");
  return std::clamp(1.0 - cfg.lambda(m) * days_separated, cfg.floor, 1.0);
}

/// Fractional days between the report and `now`. Up to a minute of clock
/// disagreement reads as zero.
inline double separation_days(const ContextMeta& report, Timestamp now) {
  const Timestamp delta = now - report.observed_at;
  if (delta < -kClockSkewToleranceS) {
    throw Error(ErrorCode::ClockSkew, "reference time precedes the report by " + std::to_string(-delta) + " s");
  }
  return delta <= 0 ? 0.0 : double(delta) / kSecondsPerDay;
}

}  // namespace reunite
