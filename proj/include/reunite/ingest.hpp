// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "reunite/acoustic.hpp"
#include "reunite/error.hpp"
#include "reunite/store.hpp"
#include "reunite/types.hpp"
#include "reunite/visual.hpp"
#include "reunite/wav.hpp"

namespace reunite {

/// Recomputes the cached appearance (fit at zero separation; matching
/// re-inflates it) and acoustic embedding from the entry's observations.
/// Audio that carries no voiced frame is dropped from its observation and
/// reported in the returned warnings.
inline std::vector<std::string> refresh_caches(GalleryEntry& entry, const ProfileTable& profiles = {},
                                               const VisualConfig& vcfg = {}) {
  std::vector<std::string> warnings;
  std::vector<VisualFeature> feats;
  for (const auto& o : entry.observations) {
    if (o.visual) feats.push_back(*o.visual);
  }
  entry.appearance.reset();
  if (!feats.empty()) entry.appearance = fit_appearance(feats, 0.0, vcfg);

  entry.acoustic.reset();
  for (auto& o : entry.observations) {
    if (!o.audio) continue;
    try {
      auto emb = embed_audio(*o.audio, profiles.at(o.species));
      if (!entry.acoustic) entry.acoustic = std::move(emb);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoVoicedFrames) throw;
      warnings.push_back("observation '" + o.obs_id + "': no voiced frames, audio dropped");
      o.audio.reset();
      o.quality.erase(Modality::Acoustic);
    }
  }
  return warnings;
}

/// Visual feature file: numbers separated by whitespace or commas.
inline VisualFeature read_feature_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open feature file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto text = ss.str();
  for (auto& c : text) {
    if (c == ',') c = ' ';
  }
  std::istringstream tokens(text);
  VisualFeature f;
  std::string tok;
  while (tokens >> tok) {
    try {
      std::size_t used = 0;
      f.values.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, path + ": not a number: '" + tok + "'");
    }
  }
  if (f.values.empty()) throw Error(ErrorCode::ParseError, path + ": empty feature vector");
  return f;
}

struct IngestRequest {
  Role role = Role::Intake;
  std::string entry_id;
  std::string obs_id;  // defaults to "<entry_id>-<n>"
  Species species;
  std::string display_name;
  std::string feature_path;
  std::string wav_path;
  std::optional<ContextMeta> context;
};

struct IngestResult {
  std::string entry_id;
  std::vector<std::string> warnings;
};

/// Adds one observation to the entry (creating it if needed), recomputes
/// its caches and persists it.
inline IngestResult ingest(GalleryStore& store, const IngestRequest& req, const ProfileTable& profiles = {},
                           const VisualConfig& vcfg = {}) {
  GalleryEntry entry;
  const auto view = store.snapshot();
  if (const auto* existing = view.find(req.entry_id)) {
    entry = *existing;
    if (!(entry.identity.species == req.species)) {
      throw Error(ErrorCode::InvalidObservation, "entry '" + req.entry_id + "' has species " +
                                                     entry.identity.species.str());
    }
  } else {
    entry.identity = {req.entry_id, req.species, req.display_name.empty() ? req.entry_id : req.display_name};
  }

  Observation obs;
  obs.obs_id = req.obs_id.empty() ? req.entry_id + "-" + std::to_string(entry.observations.size()) : req.obs_id;
  obs.role = req.role;
  obs.species = req.species;
  if (!req.feature_path.empty()) obs.visual = read_feature_file(req.feature_path);
  if (!req.wav_path.empty()) obs.audio = wav::read_file(req.wav_path);
  obs.context = req.context;
  entry.observations.push_back(std::move(obs));

  IngestResult res;
  res.warnings = refresh_caches(entry, profiles, vcfg);
  res.entry_id = store.put(std::move(entry));
  return res;
}

}  // namespace reunite
