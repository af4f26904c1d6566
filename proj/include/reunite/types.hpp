// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "reunite/error.hpp"

namespace reunite {

// ---------------------------------------------------------------------------
// Species
// ---------------------------------------------------------------------------

enum class SpeciesKind { Dog, Puppy, Elephant, Infant, Other };

/// A species tag. `Other` carries a free-form name that must match a
/// registered acoustic profile before audio from it can be analysed.
struct Species {
  SpeciesKind kind = SpeciesKind::Dog;
  std::string name;  // only meaningful for Other

  static Species dog() { return {SpeciesKind::Dog, {}}; }
  static Species puppy() { return {SpeciesKind::Puppy, {}}; }
  static Species elephant() { return {SpeciesKind::Elephant, {}}; }
  static Species infant() { return {SpeciesKind::Infant, {}}; }
  static Species other(std::string n) { return {SpeciesKind::Other, std::move(n)}; }

  std::string str() const {
    switch (kind) {
      case SpeciesKind::Dog: return "dog";
      case SpeciesKind::Puppy: return "puppy";
      case SpeciesKind::Elephant: return "elephant";
      case SpeciesKind::Infant: return "infant";
      case SpeciesKind::Other: return name;
    }
    return name;
  }

  static Species parse(std::string_view s) {
    if (s == "dog") return dog();
    if (s == "puppy") return puppy();
    if (s == "elephant") return elephant();
    if (s == "infant") return infant();
    if (s.empty()) throw Error(ErrorCode::ParseError, "empty species name");
    return other(std::string(s));
  }

  friend bool operator==(const Species& a, const Species& b) {
    return a.kind == b.kind && (a.kind != SpeciesKind::Other || a.name == b.name);
  }
  friend bool operator<(const Species& a, const Species& b) { return a.str() < b.str(); }
};

enum class Modality { Visual, Acoustic, Context };

inline constexpr Modality kAllModalities[] = {Modality::Visual, Modality::Acoustic,
                                              Modality::Context};

inline std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Visual: return "visual";
    case Modality::Acoustic: return "acoustic";
    case Modality::Context: return "context";
  }
  return "?";
}

inline Modality parse_modality(std::string_view s) {
  if (s == "visual") return Modality::Visual;
  if (s == "acoustic") return Modality::Acoustic;
  if (s == "context") return Modality::Context;
  throw Error(ErrorCode::ParseError, "unknown modality '" + std::string(s) + "'");
}

enum class Role { LostReport, Intake };

inline std::string_view to_string(Role r) {
  return r == Role::LostReport ? "lost_report" : "intake";
}

inline Role parse_role(std::string_view s) {
  if (s == "lost_report") return Role::LostReport;
  if (s == "intake") return Role::Intake;
  throw Error(ErrorCode::ParseError, "unknown role '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Time
// ---------------------------------------------------------------------------

/// UTC seconds since the Unix epoch.
using Timestamp = std::int64_t;

inline std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{t}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), int(hms.hours().count()),
                int(hms.minutes().count()), int(hms.seconds().count()));
  return buf;
}

inline Timestamp parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char z = 0;
  const std::string str(s);
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &sec, &z) != 7 ||
      z != 'Z') {
    throw Error(ErrorCode::ParseError, "expected ISO-8601 UTC timestamp, got '" + str + "'");
  }
  const year_month_day ymd{year{y}, month{unsigned(mo)}, day{unsigned(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) {
    throw Error(ErrorCode::ParseError, "invalid calendar time '" + str + "'");
  }
  const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
  return tp.time_since_epoch().count();
}

// ---------------------------------------------------------------------------
// Observations and gallery records
// ---------------------------------------------------------------------------

struct Identity {
  std::string id;
  Species species;
  std::string display_name;
};

struct ContextMeta {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  Timestamp observed_at = 0;
};

struct VisualFeature {
  std::vector<double> values;
};

/// Mono PCM16 clip.
struct AudioClip {
  std::vector<std::int16_t> samples;
  int sample_rate_hz = 0;

  double duration_s() const {
    return sample_rate_hz > 0 ? double(samples.size()) / sample_rate_hz : 0.0;
  }
};

struct Observation {
  std::string obs_id;
  Role role = Role::Intake;
  Species species;
  std::optional<VisualFeature> visual;
  std::optional<AudioClip> audio;
  std::optional<ContextMeta> context;
  std::map<Modality, double> quality;  // missing key reads as 1.0

  bool has(Modality m) const {
    switch (m) {
      case Modality::Visual: return visual.has_value();
      case Modality::Acoustic: return audio.has_value();
      case Modality::Context: return context.has_value();
    }
    return false;
  }

  double quality_of(Modality m) const {
    auto it = quality.find(m);
    return it == quality.end() ? 1.0 : it->second;
  }
};

/// Diagonal Gaussian over visual feature space. `sample_var` is the
/// population variance of the fitted observations before stress inflation;
/// keeping it lets the appearance be re-inflated for a different separation
/// time without refitting.
struct GaussianAppearance {
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> sample_var;
  int n_obs = 1;
  double inflated_for_days = 0.0;
};

/// Layout: [n_bands centred mean log band energies | n_bands std log band
/// energies | normalised mean F0 | repetition rate (Hz) | AM depth].
struct AcousticEmbedding {
  std::vector<double> vector;
  Species species;
  int voiced_frame_count = 0;
};

struct GalleryEntry {
  Identity identity;
  std::vector<Observation> observations;
  std::optional<GaussianAppearance> appearance;
  std::optional<AcousticEmbedding> acoustic;
  bool resolved = false;
  std::set<std::string> exclusions;  // query ids rejected by a reviewer

  /// Role of the record, taken from its first observation.
  Role role() const {
    return observations.empty() ? Role::Intake : observations.front().role;
  }
};

/// Checks the per-observation invariants. `dim` is the store's D_v.
inline void validate_observation(const Observation& obs, std::size_t dim) {
  if (!obs.visual && !obs.audio && !obs.context) {
    throw Error(ErrorCode::InvalidObservation, "observation '" + obs.obs_id + "' has no modality");
  }
  if (obs.visual) {
    if (obs.visual->values.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "visual vector of '" + obs.obs_id + "' has length " +
                      std::to_string(obs.visual->values.size()) + ", store expects " +
                      std::to_string(dim));
    }
    for (double v : obs.visual->values) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::InvalidObservation, "non-finite visual feature in '" + obs.obs_id + "'");
      }
    }
  }
  if (obs.context) {
    const auto& c = *obs.context;
    if (!(c.lat_deg >= -90.0 && c.lat_deg <= 90.0) || !(c.lon_deg >= -180.0 && c.lon_deg <= 180.0)) {
      throw Error(ErrorCode::InvalidObservation, "coordinates out of range in '" + obs.obs_id + "'");
    }
  }
  if (obs.audio && obs.audio->sample_rate_hz <= 0) {
    throw Error(ErrorCode::InvalidObservation, "non-positive sample rate in '" + obs.obs_id + "'");
  }
  for (const auto& [m, q] : obs.quality) {
    if (!obs.has(m)) {
      throw Error(ErrorCode::InvalidObservation,
                  "quality given for absent modality " + std::string(to_string(m)));
    }
    if (!(q >= 0.0 && q <= 1.0)) {
      throw Error(ErrorCode::InvalidObservation, "quality outside [0,1] in '" + obs.obs_id + "'");
    }
  }
}

}  // namespace reunite
