// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic synthetic re-identification benchmark.
//
// Random numbers: every stream is a std::mt19937_64 (whose output sequence
// is fixed by the C++ standard) seeded with splitmix64(seed ^ stream tag).
// Uniform doubles take the top 53 bits of one draw, u = (x >> 11) * 2^-53.
// Normals use one Box-Muller pair per value, z = sqrt(-2 ln(1 - u1)) *
// cos(2 pi u2). None of the implementation-defined <random> distributions
// are used, so a seed gives the same dataset on every conforming platform
// whose libm rounds log/cos/sin identically.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "reunite/acoustic.hpp"
#include "reunite/error.hpp"
#include "reunite/ingest.hpp"
#include "reunite/serialize.hpp"
#include "reunite/store.hpp"
#include "reunite/types.hpp"
#include "reunite/wav.hpp"

namespace reunite::synth {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded stream with the fixed transformations documented above.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Rng(std::uint64_t seed, std::uint64_t tag) : engine_(splitmix64(seed ^ splitmix64(tag))) {}

  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {  // inclusive
    return lo + int(uniform() * double(hi - lo + 1));
  }
  double normal() {
    const double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Sample rate used for synthetic audio of each species.
inline int default_sample_rate(const Species& s) {
  switch (s.kind) {
    case SpeciesKind::Dog:
    case SpeciesKind::Puppy: return 16000;
    case SpeciesKind::Infant: return 8000;
    case SpeciesKind::Elephant: return 1000;
    case SpeciesKind::Other: break;
  }
  throw Error(ErrorCode::UnknownSpecies, "no synthetic sample rate for '" + s.str() + "'");
}

inline double default_clip_seconds(const Species& s) { return s.kind == SpeciesKind::Elephant ? 10.0 : 2.0; }

struct SynthConfig {
  int n_identities = 60;
  std::vector<std::pair<Species, int>> species_mix{
      {Species::dog(), 30}, {Species::puppy(), 10}, {Species::elephant(), 10}, {Species::infant(), 10}};
  int cluster_size = 5;
  int n_clusters = 4;
  double visual_noise_sigma = 0.05;
  double stress_drift_per_day = 0.03;
  double snr_db = 30.0;  // +inf disables noise
  double days_min = 0.0;
  double days_max = 10.0;
  std::uint64_t seed = 42;
  std::size_t visual_dim = kDefaultVisualDim;
  double v_max_km_per_day = 2.0;
  double region_radius_km = 30.0;
  double center_lat = 40.0;
  double center_lon = -75.0;
  Timestamp intake_time = 1767225600;  // 2026-01-01T00:00:00Z

  void validate() const {
    int total = 0;
    for (const auto& [s, n] : species_mix) {
      if (n < 0) throw Error(ErrorCode::InvalidConfig, "negative species count");
      total += n;
    }
    if (total != n_identities) throw Error(ErrorCode::InvalidConfig, "species mix does not sum to n_identities");
    if (cluster_size < 0 || n_clusters < 0 || cluster_size * n_clusters > n_identities) {
      throw Error(ErrorCode::InvalidConfig, "clusters do not fit in the identity count");
    }
    if (n_clusters > 0 && cluster_size < 2) throw Error(ErrorCode::InvalidConfig, "cluster_size must be >= 2");
    if (!(days_min >= 0.0 && days_max >= days_min)) throw Error(ErrorCode::InvalidConfig, "bad days range");
    if (!(visual_noise_sigma >= 0.0) || visual_dim == 0) throw Error(ErrorCode::InvalidConfig, "bad visual settings");
    if (std::isnan(snr_db)) throw Error(ErrorCode::InvalidConfig, "snr_db is NaN");
  }

  /// Rescales the default species proportions to `n` identities
  /// (largest-remainder rounding, ties to earlier species).
  void set_identity_count(int n) {
    if (n < 1) throw Error(ErrorCode::InvalidConfig, "need at least one identity");
    int old_total = 0;
    for (const auto& [s, c] : species_mix) old_total += c;
    std::vector<std::pair<double, std::size_t>> rema;
    int assigned = 0;
    for (std::size_t i = 0; i < species_mix.size(); ++i) {
      const double exact = double(species_mix[i].second) * n / old_total;
      species_mix[i].second = int(std::floor(exact));
      assigned += species_mix[i].second;
      rema.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(rema.begin(), rema.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) species_mix[rema[i % rema.size()].second].second++;
    n_identities = n;
  }
};

/// Hidden per-identity generative parameters.
struct IdentityLatent {
  std::vector<double> visual_prototype;
  std::vector<double> drift_direction;  // unit vector
  double f0_base_hz = 0.0;
  double rep_rate_hz = 1.0;
  double am_depth_base = 0.0;
  double band_tilt = 0.0;
};

/// F0 range synthetic identities are drawn from: the lower half of the
/// species search span, so the second harmonic stays in band.
inline std::pair<double, double> f0_sampling_range(const SpeciesProfile& p) {
  return {p.f0_lo_hz * 1.05, p.f0_lo_hz + 0.5 * (p.f0_hi_hz - p.f0_lo_hz)};
}

inline std::pair<double, double> rep_rate_range(const Species& s) {
  switch (s.kind) {
    case SpeciesKind::Elephant: return {0.5, 1.0};
    case SpeciesKind::Infant: return {0.8, 2.5};
    default: return {1.5, 5.0};
  }
}

/// Burst train of three-harmonic tones: one burst per repetition period
/// (half duty cycle, 10% raised-cosine edges), F0 jittered +/-2% per burst,
/// sinusoidal AM of depth am_depth_base (two cycles per burst), white noise
/// at the requested SNR, peak-normalised to half of full scale.
inline AudioClip synth_vocalization(const IdentityLatent& latent, const Species& species, double duration_s,
                                    double snr_db, std::uint64_t sub_seed) {
  const auto profile = default_profile(species);
  const int fs = default_sample_rate(species);
  const auto n = std::size_t(std::llround(duration_s * fs));
  const auto frame = std::size_t(std::lround(profile.frame_ms * fs / 1000.0));
  const auto hop = std::size_t(std::lround(profile.hop_ms * fs / 1000.0));
  if (!(duration_s > 0.0) || n < frame + hop) {
    throw Error(ErrorCode::InvalidDuration, "clip shorter than two analysis frames");
  }

  Rng jitter_rng(sub_seed, 0x6a17);
  Rng noise_rng(sub_seed, 0x9015e);
  std::vector<double> x(n, 0.0);
  const double period = 1.0 / latent.rep_rate_hz;
  const double burst_len = 0.5 * period;
  const double ramp = 0.1 * burst_len;
  const double am_rate = 2.0 / burst_len;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  for (int b = 0; double(b) * period < duration_s; ++b) {
    const double f0 = latent.f0_base_hz * (1.0 + jitter_rng.uniform(-0.02, 0.02));
    const double start = b * period;
    const auto i0 = std::size_t(std::ceil(start * fs));
    const auto i1 = std::min(n, std::size_t(std::ceil((start + burst_len) * fs)));
    for (std::size_t i = i0; i < i1; ++i) {
      const double t = double(i) / fs - start;
      double v = 0.0;
      for (int h = 1; h <= 3; ++h) {
        if (h * f0 >= 0.5 * fs) break;
        v += std::exp(-latent.band_tilt * (h - 1)) * std::sin(two_pi * h * f0 * t);
      }
      double env = 1.0 + latent.am_depth_base * std::sin(two_pi * am_rate * t);
      if (t < ramp) env *= 0.5 - 0.5 * std::cos(std::numbers::pi * t / ramp);
      if (burst_len - t < ramp) env *= 0.5 - 0.5 * std::cos(std::numbers::pi * std::max(0.0, burst_len - t) / ramp);
      x[i] = env * v;
    }
  }

  if (std::isfinite(snr_db)) {
    double ps = 0.0;
    for (double v : x) ps += v * v;
    ps /= double(n);
    std::vector<double> noise(n);
    double pn = 0.0;
    for (auto& v : noise) {
      v = noise_rng.normal();
      pn += v * v;
    }
    pn /= double(n);
    const double gain = pn > 0.0 ? std::sqrt(ps / std::pow(10.0, snr_db / 10.0) / pn) : 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] += gain * noise[i];
  }

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  AudioClip clip;
  clip.sample_rate_hz = fs;
  clip.samples.resize(n);
  const double scale = peak > 0.0 ? 0.5 * 32767.0 / peak : 0.0;
  for (std::size_t i = 0; i < n; ++i) clip.samples[i] = std::int16_t(std::lround(x[i] * scale));
  return clip;
}

struct QueryRecord {
  Observation observation;
  std::string truth_id;
  int cluster = -1;  // -1: not a look-alike cluster member
  std::string split = "test";  // "test" or "calibration"
  double days = 0.0;

  bool ambiguous() const { return cluster >= 0; }
};

struct Dataset {
  std::vector<GalleryEntry> gallery;
  std::vector<QueryRecord> queries;
  std::size_t visual_dim = kDefaultVisualDim;
};

namespace detail {

inline std::vector<double> gaussian_vector(Rng& rng, std::size_t dim, double sigma) {
  std::vector<double> v(dim);
  for (auto& x : v) x = sigma * rng.normal();
  return v;
}

inline ContextMeta offset_context(Rng& rng, double lat, double lon, double radius_km, Timestamp at) {
  const double r = radius_km * std::sqrt(rng.uniform());
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  constexpr double km_per_deg = 6371.0088 * std::numbers::pi / 180.0;
  const double dlat = r * std::sin(theta) / km_per_deg;
  const double dlon = r * std::cos(theta) / (km_per_deg * std::cos(lat * std::numbers::pi / 180.0));
  return {std::clamp(lat + dlat, -90.0, 90.0), std::clamp(lon + dlon, -180.0, 180.0), at};
}

}  // namespace detail

/// Species tag per identity and look-alike cluster index (-1 for none).
/// Each cluster is carved from the species with the most identities still
/// unclustered.
inline std::vector<std::pair<Species, int>> assign_species_and_clusters(const SynthConfig& cfg) {
  std::vector<std::pair<Species, int>> out;
  std::vector<std::size_t> first;  // index of the species block start
  for (const auto& [s, n] : cfg.species_mix) {
    first.push_back(out.size());
    for (int i = 0; i < n; ++i) out.emplace_back(s, -1);
  }
  std::vector<int> free_count;
  for (const auto& [s, n] : cfg.species_mix) free_count.push_back(n);
  for (int c = 0; c < cfg.n_clusters; ++c) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < free_count.size(); ++i) {
      if (free_count[i] > free_count[best]) best = i;
    }
    if (free_count[best] < cfg.cluster_size) {
      throw Error(ErrorCode::InvalidConfig, "no species has room for another look-alike cluster");
    }
    const std::size_t used = std::size_t(cfg.species_mix[best].second - free_count[best]);
    for (int m = 0; m < cfg.cluster_size; ++m) out[first[best] + used + std::size_t(m)].second = c;
    free_count[best] -= cfg.cluster_size;
  }
  return out;
}

inline std::string identity_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "id-%03d", i);
  return buf;
}

/// Generates gallery entries (with caches) and labelled queries: one test
/// query and one calibration query per identity.
inline Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto tags = assign_species_and_clusters(cfg);
  const std::size_t dim = cfg.visual_dim;

  std::vector<std::vector<double>> cluster_base(std::size_t(cfg.n_clusters));
  {
    Rng rng(cfg.seed, 0xc1u);
    for (auto& b : cluster_base) b = detail::gaussian_vector(rng, dim, 1.0);
  }

  Dataset ds;
  ds.visual_dim = dim;
  for (int i = 0; i < cfg.n_identities; ++i) {
    const auto& [species, cluster] = tags[std::size_t(i)];
    const auto profile = default_profile(species);
    Rng rng(cfg.seed, 0x1000u + std::uint64_t(i));

    IdentityLatent lat;
    if (cluster >= 0) {
      lat.visual_prototype = cluster_base[std::size_t(cluster)];
      for (auto& v : lat.visual_prototype) v += 0.5 * cfg.visual_noise_sigma * rng.normal();
    } else {
      lat.visual_prototype = detail::gaussian_vector(rng, dim, 1.0);
    }
    lat.drift_direction = detail::gaussian_vector(rng, dim, 1.0);
    double norm = 0.0;
    for (double v : lat.drift_direction) norm += v * v;
    norm = std::sqrt(norm);
    for (auto& v : lat.drift_direction) v /= norm;
    const auto [f0_lo, f0_hi] = f0_sampling_range(profile);
    lat.f0_base_hz = rng.uniform(f0_lo, f0_hi);
    const auto [rr_lo, rr_hi] = rep_rate_range(species);
    lat.rep_rate_hz = rng.uniform(rr_lo, rr_hi);
    lat.am_depth_base = rng.uniform(0.05, 0.3);
    lat.band_tilt = rng.uniform(0.2, 1.5);

    const auto id = identity_id(i);
    const double clip_s = default_clip_seconds(species);
    const auto intake_ctx = detail::offset_context(rng, cfg.center_lat, cfg.center_lon, cfg.region_radius_km,
                                                   cfg.intake_time);

    GalleryEntry entry;
    entry.identity = {id, species, species.str() + " " + std::to_string(i)};
    const int n_obs = rng.uniform_int(1, 3);
    for (int j = 0; j < n_obs; ++j) {
      Observation o;
      o.obs_id = id + "-g" + std::to_string(j);
      o.role = Role::Intake;
      o.species = species;
      auto v = lat.visual_prototype;
      for (auto& x : v) x += cfg.visual_noise_sigma * rng.normal();
      o.visual = VisualFeature{std::move(v)};
      o.context = intake_ctx;
      o.context->observed_at = cfg.intake_time - Timestamp(j) * 3600;
      if (j == 0) o.audio = synth_vocalization(lat, species, clip_s, cfg.snr_db, rng.next());
      entry.observations.push_back(std::move(o));
    }
    refresh_caches(entry);
    ds.gallery.push_back(std::move(entry));

    for (const char* split : {"test", "calibration"}) {
      QueryRecord q;
      q.truth_id = id;
      q.cluster = cluster;
      q.split = split;
      q.days = rng.uniform(cfg.days_min, cfg.days_max);
      Observation& o = q.observation;
      o.obs_id = std::string(split[0] == 't' ? "q-" : "c-") + id;
      o.role = Role::LostReport;
      o.species = species;
      auto v = lat.visual_prototype;
      for (std::size_t d = 0; d < dim; ++d) {
        v[d] += lat.drift_direction[d] * cfg.stress_drift_per_day * q.days + cfg.visual_noise_sigma * rng.normal();
      }
      o.visual = VisualFeature{std::move(v)};
      const auto lost_at = cfg.intake_time - Timestamp(std::llround(q.days * 86400.0));
      o.context = detail::offset_context(rng, intake_ctx.lat_deg, intake_ctx.lon_deg,
                                         cfg.v_max_km_per_day * q.days, lost_at);
      o.audio = synth_vocalization(lat, species, clip_s, cfg.snr_db, rng.next());
      ds.queries.push_back(std::move(q));
    }
  }
  return ds;
}

inline io::json to_json(const SynthConfig& cfg) {
  io::json mix = io::json::array();
  for (const auto& [s, n] : cfg.species_mix) mix.push_back({{"species", s.str()}, {"count", n}});
  return {{"n_identities", cfg.n_identities},
          {"species_mix", mix},
          {"cluster_size", cfg.cluster_size},
          {"n_clusters", cfg.n_clusters},
          {"visual_noise_sigma", cfg.visual_noise_sigma},
          {"stress_drift_per_day", cfg.stress_drift_per_day},
          {"snr_db", std::isfinite(cfg.snr_db) ? io::json(cfg.snr_db) : io::json("inf")},
          {"days_range", {cfg.days_min, cfg.days_max}},
          {"seed", cfg.seed},
          {"visual_dim", cfg.visual_dim}};
}

inline io::json to_json(const QueryRecord& q) {
  return {{"query", io::to_json(q.observation)},
          {"truth_id", q.truth_id},
          {"cluster", q.cluster},
          {"split", q.split},
          {"days", q.days}};
}

inline QueryRecord query_from_json(const io::json& j, const std::filesystem::path& root) {
  QueryRecord q;
  q.observation = io::observation_from_json(j.at("query"), root);
  q.truth_id = j.at("truth_id").get<std::string>();
  q.cluster = j.at("cluster").get<int>();
  q.split = j.at("split").get<std::string>();
  q.days = j.at("days").get<double>();
  return q;
}

/// Writes the gallery as a store directory plus `queries.ndjson` and
/// `synth.json` (the generating configuration).
inline void write_dataset(const Dataset& ds, const SynthConfig& cfg, const std::filesystem::path& out) {
  auto store = GalleryStore::create(out, ds.visual_dim);
  store.put_many(ds.gallery);
  std::ofstream q(out / "queries.ndjson", std::ios::binary | std::ios::trunc);
  if (!q) throw Error(ErrorCode::IoError, "cannot write queries.ndjson");
  for (const auto& rec : ds.queries) {
    if (rec.observation.audio) {
      wav::write_file((out / io::audio_relpath(rec.observation.obs_id)).string(), *rec.observation.audio);
    }
    q << to_json(rec).dump() << "\n";
  }
  std::ofstream meta(out / "synth.json", std::ios::binary | std::ios::trunc);
  meta << to_json(cfg).dump(2) << "\n";
}

/// Reads a dataset written by write_dataset (or any store with a
/// queries.ndjson alongside).
inline Dataset read_dataset(const std::filesystem::path& dir) {
  auto store = GalleryStore::open(dir);
  Dataset ds;
  ds.visual_dim = store.visual_dim();
  for (const auto& [id, e] : store.snapshot()) ds.gallery.push_back(*e);
  std::ifstream in(dir / "queries.ndjson");
  if (!in) throw Error(ErrorCode::IoError, "no queries.ndjson in " + dir.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      ds.queries.push_back(query_from_json(io::json::parse(line), dir));
    } catch (const io::json::exception& ex) {
      throw Error(ErrorCode::ParseError, std::string("queries.ndjson: ") + ex.what());
    }
  }
  return ds;
}

}  // namespace reunite::synth
