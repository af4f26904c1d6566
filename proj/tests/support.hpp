// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures for the unit tests.

#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "reunite/acoustic.hpp"
#include "reunite/types.hpp"

namespace reunite::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("reunite-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Waveform sine(double freq_hz, double fs, double seconds, double amp = 0.5) {
  Waveform w;
  w.sample_rate_hz = fs;
  w.samples.resize(std::size_t(std::llround(fs * seconds)));
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * double(i) / fs);
  }
  return w;
}

inline Waveform silence(double fs, double seconds) {
  Waveform w;
  w.sample_rate_hz = fs;
  w.samples.assign(std::size_t(std::llround(fs * seconds)), 0.0);
  return w;
}

inline AudioClip to_clip(const Waveform& w) {
  AudioClip c;
  c.sample_rate_hz = int(w.sample_rate_hz);
  c.samples.reserve(w.samples.size());
  for (double v : w.samples) c.samples.push_back(std::int16_t(std::lround(std::clamp(v, -1.0, 1.0) * 32767.0)));
  return c;
}

inline VisualFeature constant_feature(std::size_t dim, double v) { return VisualFeature{std::vector<double>(dim, v)}; }

inline Observation visual_obs(const std::string& id, Role role, std::vector<double> values,
                              Species species = Species::dog()) {
  Observation o;
  o.obs_id = id;
  o.role = role;
  o.species = std::move(species);
  o.visual = VisualFeature{std::move(values)};
  return o;
}

inline GalleryEntry entry_with(const std::string& id, Observation obs, const std::string& name = "") {
  GalleryEntry e;
  e.identity = {id, obs.species, name.empty() ? id : name};
  e.observations.push_back(std::move(obs));
  return e;
}

}  // namespace reunite::test
