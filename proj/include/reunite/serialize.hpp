// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

// JSON record schema shared by the store, the dataset files and the HTTP API.

#pragma once

#include <cstdio>
#include <filesystem>
#include <string>

#include <json.hpp>
#include <zlib.h>

#include "reunite/error.hpp"
#include "reunite/types.hpp"
#include "reunite/wav.hpp"

namespace reunite::io {

using json = nlohmann::json;

inline std::string audio_relpath(const std::string& obs_id) { return "audio/" + obs_id + ".wav"; }

/// Ids become file names, so they are limited to a portable character set.
inline void check_id(const std::string& id, const char* what) {
  if (id.empty()) throw Error(ErrorCode::InvalidObservation, std::string(what) + " must be non-empty");
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok || id == "." || id == "..") {
      throw Error(ErrorCode::InvalidObservation, std::string(what) + " '" + id + "' has characters outside [A-Za-z0-9._-]");
    }
  }
}

inline std::string crc32_hex(const std::string& text) {
  const auto crc = ::crc32(0L, reinterpret_cast<const Bytef*>(text.data()), uInt(text.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

inline json to_json(const ContextMeta& c) {
  return {{"lat_deg", c.lat_deg}, {"lon_deg", c.lon_deg}, {"observed_at", format_iso8601(c.observed_at)}};
}

inline ContextMeta context_from_json(const json& j) {
  return {j.at("lat_deg").get<double>(), j.at("lon_deg").get<double>(),
          parse_iso8601(j.at("observed_at").get<std::string>())};
}

/// Audio is referenced by relative path; the samples live in a WAV file.
inline json to_json(const Observation& o) {
  json j = {{"obs_id", o.obs_id}, {"role", to_string(o.role)}, {"species", o.species.str()}};
  if (o.visual) j["visual"] = o.visual->values;
  if (o.audio) j["audio"] = audio_relpath(o.obs_id);
  if (o.context) j["context"] = to_json(*o.context);
  if (!o.quality.empty()) {
    json q = json::object();
    for (const auto& [m, v] : o.quality) q[std::string(to_string(m))] = v;
    j["quality"] = q;
  }
  return j;
}

/// Reads the referenced WAV relative to `root` when `load_audio` is set.
inline Observation observation_from_json(const json& j, const std::filesystem::path& root,
                                         bool load_audio = true) {
  Observation o;
  o.obs_id = j.at("obs_id").get<std::string>();
  o.role = parse_role(j.at("role").get<std::string>());
  o.species = Species::parse(j.at("species").get<std::string>());
  if (j.contains("visual")) o.visual = VisualFeature{j.at("visual").get<std::vector<double>>()};
  if (j.contains("audio") && load_audio) {
    o.audio = wav::read_file((root / j.at("audio").get<std::string>()).string());
  }
  if (j.contains("context")) o.context = context_from_json(j.at("context"));
  if (j.contains("quality")) {
    for (const auto& [k, v] : j.at("quality").items()) o.quality[parse_modality(k)] = v.get<double>();
  }
  return o;
}

inline json to_json(const GaussianAppearance& g) {
  return {{"mean", g.mean}, {"var", g.var}, {"sample_var", g.sample_var}, {"n_obs", g.n_obs},
          {"inflated_for_days", g.inflated_for_days}};
}

inline GaussianAppearance appearance_from_json(const json& j) {
  GaussianAppearance g;
  g.mean = j.at("mean").get<std::vector<double>>();
  g.var = j.at("var").get<std::vector<double>>();
  g.sample_var = j.at("sample_var").get<std::vector<double>>();
  g.n_obs = j.at("n_obs").get<int>();
  g.inflated_for_days = j.at("inflated_for_days").get<double>();
  return g;
}

inline json to_json(const AcousticEmbedding& e) {
  return {{"vector", e.vector}, {"species", e.species.str()}, {"voiced_frame_count", e.voiced_frame_count}};
}

inline AcousticEmbedding embedding_from_json(const json& j) {
  AcousticEmbedding e;
  e.vector = j.at("vector").get<std::vector<double>>();
  e.species = Species::parse(j.at("species").get<std::string>());
  e.voiced_frame_count = j.at("voiced_frame_count").get<int>();
  return e;
}

inline json to_json(const GalleryEntry& e) {
  json obs = json::array();
  for (const auto& o : e.observations) obs.push_back(to_json(o));
  json j = {{"id", e.identity.id},
            {"species", e.identity.species.str()},
            {"display_name", e.identity.display_name},
            {"observations", obs},
            {"resolved", e.resolved},
            {"exclusions", e.exclusions}};
  if (e.appearance) j["appearance"] = to_json(*e.appearance);
  if (e.acoustic) j["acoustic"] = to_json(*e.acoustic);
  return j;
}

inline GalleryEntry entry_from_json(const json& j, const std::filesystem::path& root, bool load_audio = true) {
  GalleryEntry e;
  e.identity.id = j.at("id").get<std::string>();
  e.identity.species = Species::parse(j.at("species").get<std::string>());
  e.identity.display_name = j.at("display_name").get<std::string>();
  for (const auto& o : j.at("observations")) e.observations.push_back(observation_from_json(o, root, load_audio));
  e.resolved = j.at("resolved").get<bool>();
  e.exclusions = j.at("exclusions").get<std::set<std::string>>();
  if (j.contains("appearance")) e.appearance = appearance_from_json(j.at("appearance"));
  if (j.contains("acoustic")) e.acoustic = embedding_from_json(j.at("acoustic"));
  return e;
}

/// One NDJSON line with a CRC-32 over the rest of the record.
inline std::string checksummed_line(json j) {
  j.erase("crc32");
  const auto body = j.dump();
  j["crc32"] = crc32_hex(body);
  return j.dump();
}

/// Parses a checksummed line; throws StoreCorrupt on any mismatch.
inline json verify_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::StoreCorrupt, std::string("unparseable record: ") + ex.what());
  }
  if (!j.is_object() || !j.contains("crc32") || !j["crc32"].is_string()) {
    throw Error(ErrorCode::StoreCorrupt, "record without checksum");
  }
  const auto expected = j["crc32"].get<std::string>();
  j.erase("crc32");
  if (crc32_hex(j.dump()) != expected) throw Error(ErrorCode::StoreCorrupt, "checksum mismatch");
  return j;
}

}  // namespace reunite::io
