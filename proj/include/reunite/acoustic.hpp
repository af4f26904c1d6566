// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

// Species-adaptive acoustic fingerprinting: log-spaced triangular filterbank
// energies, autocorrelation F0 tracking and envelope prosody, pooled into a
// fixed-length embedding compared by z-normalised cosine similarity.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <numbers>
#include <utility>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "reunite/config.hpp"
#include "reunite/error.hpp"
#include "reunite/types.hpp"

namespace reunite {

inline constexpr double kLogEnergyFloor = 1e-10;
inline constexpr double kNormStdFloor = 1e-6;

struct SpeciesProfile {
  Species species;
  double f_min_hz = 0.0;
  double f_max_hz = 0.0;
  int n_bands = 12;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double f0_lo_hz = 0.0;
  double f0_hi_hz = 0.0;
  double voicing_threshold = 0.5;

  void validate() const {
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::InvalidConfig, "profile '" + species.str() + "': " + why);
    };
    if (!(f_min_hz > 0.0 && f_min_hz < f_max_hz)) fail("need 0 < f_min < f_max");
    if (n_bands < 1) fail("n_bands must be positive");
    if (!(hop_ms > 0.0)) fail("hop_ms must be positive");
    if (!(f0_lo_hz >= f_min_hz && f0_hi_hz <= f_max_hz && f0_lo_hz < f0_hi_hz)) {
      fail("f0 search range must lie inside [f_min, f_max]");
    }
    if (frame_ms < 2000.0 / f_min_hz) fail("frame must span two periods of f_min");
    if (!(voicing_threshold > 0.0 && voicing_threshold < 1.0)) fail("voicing threshold outside (0,1)");
  }

  std::size_t embedding_dim() const { return 2 * std::size_t(n_bands) + 3; }
};

/// Built-in table: dog 1-3 kHz, puppy 2-4 kHz, elephant 10-35 Hz, infant
/// 300-600 Hz. F0 is searched over the whole band.
inline SpeciesProfile builtin_profile(SpeciesKind kind) {
  SpeciesProfile p;
  switch (kind) {
    case SpeciesKind::Dog:
      p = {Species::dog(), 1000.0, 3000.0, 12, 25.0, 10.0, 1000.0, 3000.0, 0.5};
      break;
    case SpeciesKind::Puppy:
      p = {Species::puppy(), 2000.0, 4000.0, 12, 25.0, 10.0, 2000.0, 4000.0, 0.5};
      break;
    case SpeciesKind::Elephant:
      p = {Species::elephant(), 10.0, 35.0, 12, 2000.0, 500.0, 10.0, 35.0, 0.5};
      break;
    case SpeciesKind::Infant:
      p = {Species::infant(), 300.0, 600.0, 12, 40.0, 10.0, 300.0, 600.0, 0.5};
      break;
    case SpeciesKind::Other:
      throw Error(ErrorCode::UnknownSpecies, "no built-in profile for unnamed species");
  }
  return p;
}

/// Profiles by species name: the built-ins plus anything registered or loaded
/// from a profile table file.
class ProfileTable {
 public:
  ProfileTable() {
    for (auto k : {SpeciesKind::Dog, SpeciesKind::Puppy, SpeciesKind::Elephant, SpeciesKind::Infant}) {
      auto p = builtin_profile(k);
      profiles_[p.species.str()] = p;
    }
  }

  void put(SpeciesProfile p) {
    p.validate();
    profiles_[p.species.str()] = std::move(p);
  }

  const SpeciesProfile& at(const Species& s) const {
    auto it = profiles_.find(s.str());
    if (it == profiles_.end()) {
      throw Error(ErrorCode::UnknownSpecies, "no acoustic profile registered for '" + s.str() + "'");
    }
    return it->second;
  }

  /// Keys are `<species>.<field>` with fields f_min_hz, f_max_hz, n_bands,
  /// frame_ms, hop_ms, f0_lo_hz, f0_hi_hz, voicing_threshold. Fields not
  /// given keep the built-in value (or zero for a new species).
  void apply(const KeyValueFile& kv) {
    std::map<std::string, SpeciesProfile> touched;
    for (const auto& [key, value] : kv.values()) {
      const auto dot = key.find('.');
      if (dot == std::string::npos) continue;
      const auto name = key.substr(0, dot);
      if (is_engine_section(name) || touched.count(name)) continue;
      SpeciesProfile p;
      auto it = profiles_.find(name);
      if (it != profiles_.end()) {
        p = it->second;
      } else {
        p.species = Species::parse(name);
      }
      kv.get(name + ".f_min_hz", p.f_min_hz);
      kv.get(name + ".f_max_hz", p.f_max_hz);
      kv.get(name + ".n_bands", p.n_bands);
      kv.get(name + ".frame_ms", p.frame_ms);
      kv.get(name + ".hop_ms", p.hop_ms);
      kv.get(name + ".f0_lo_hz", p.f0_lo_hz);
      kv.get(name + ".f0_hi_hz", p.f0_hi_hz);
      kv.get(name + ".voicing_threshold", p.voicing_threshold);
      touched[name] = p;
    }
    for (auto& [name, p] : touched) put(p);
  }

 private:
  std::map<std::string, SpeciesProfile> profiles_;
};

inline SpeciesProfile default_profile(const Species& species) {
  if (species.kind == SpeciesKind::Other) {
    throw Error(ErrorCode::UnknownSpecies, "no default profile for '" + species.str() + "'");
  }
  return builtin_profile(species.kind);
}

/// Floating-point view of a clip in [-1, 1).
struct Waveform {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;

  static Waveform from_clip(const AudioClip& clip) {
    Waveform w;
    w.sample_rate_hz = clip.sample_rate_hz;
    w.samples.reserve(clip.samples.size());
    for (auto s : clip.samples) w.samples.push_back(s / 32768.0);
    return w;
  }

  double duration_s() const { return samples.size() / sample_rate_hz; }
};

/// Frame geometry for a profile at a given sample rate.
struct FrameLayout {
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::size_t n_frames = 0;
};

namespace detail {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline FrameLayout layout_for(const Waveform& w, const SpeciesProfile& p) {
  if (w.sample_rate_hz < 4.0 * p.f_max_hz) {
    throw Error(ErrorCode::SampleRateTooLow,
                std::to_string(int(w.sample_rate_hz)) + " Hz is below 4 x f_max for " + p.species.str());
  }
  FrameLayout l;
  l.frame_len = std::size_t(std::lround(p.frame_ms * w.sample_rate_hz / 1000.0));
  l.hop = std::max<std::size_t>(1, std::size_t(std::lround(p.hop_ms * w.sample_rate_hz / 1000.0)));
  if (w.samples.size() < l.frame_len + l.hop) {
    throw Error(ErrorCode::TooShort, "clip shorter than two analysis frames");
  }
  l.n_frames = (w.samples.size() - l.frame_len) / l.hop + 1;
  return l;
}

inline double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / x.size());
}

}  // namespace detail

/// Centre frequencies of the filterbank: n_bands + 2 log-spaced points on
/// [f_min, f_max]; filter b (0-based) peaks at edges[b + 1].
inline std::vector<double> filterbank_edges(const SpeciesProfile& p) {
  std::vector<double> edges(p.n_bands + 2);
  const double ratio = p.f_max_hz / p.f_min_hz;
  for (int j = 0; j < p.n_bands + 2; ++j) {
    edges[j] = p.f_min_hz * std::pow(ratio, double(j) / (p.n_bands + 1));
  }
  return edges;
}

inline std::vector<double> band_centers(const SpeciesProfile& p) {
  auto e = filterbank_edges(p);
  return {e.begin() + 1, e.end() - 1};
}

/// Triangular weight of filter `band` at frequency `f`.
inline double triangle_weight(std::span<const double> edges, int band, double f) {
  const double lo = edges[band], mid = edges[band + 1], hi = edges[band + 2];
  if (f <= lo || f >= hi) return 0.0;
  return f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
}

/// FFT length: a power of two covering the frame, fine enough that the
/// narrowest filter spans several bins.
inline std::size_t fft_size(const SpeciesProfile& p, double sample_rate_hz, std::size_t frame_len) {
  const auto edges = filterbank_edges(p);
  const double narrowest = edges[1] - edges[0];
  const auto min_len = std::size_t(std::ceil(4.0 * sample_rate_hz / narrowest));
  return detail::next_pow2(std::max(frame_len, min_len));
}

/// Symmetric Hann window.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(n - 1));
  }
  return w;
}

/// Log band energies, one row per frame.
using BandMatrix = std::vector<std::vector<double>>;

inline BandMatrix band_energies(const Waveform& wave, const SpeciesProfile& p) {
  const auto layout = detail::layout_for(wave, p);
  const auto nfft = fft_size(p, wave.sample_rate_hz, layout.frame_len);
  const auto window = hann_window(layout.frame_len);
  const auto edges = filterbank_edges(p);

  // Sparse filter weights per band: (bin, weight).
  std::vector<std::vector<std::pair<std::size_t, double>>> weights(p.n_bands);
  for (std::size_t k = 0; k <= nfft / 2; ++k) {
    const double f = double(k) * wave.sample_rate_hz / double(nfft);
    for (int b = 0; b < p.n_bands; ++b) {
      const double w = triangle_weight(edges, b, f);
      if (w > 0.0) weights[b].emplace_back(k, w);
    }
  }

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(nfft, 0.0);
  std::vector<std::complex<double>> spec;
  std::vector<double> power(nfft / 2 + 1);

  BandMatrix out(layout.n_frames, std::vector<double>(p.n_bands));
  for (std::size_t t = 0; t < layout.n_frames; ++t) {
    const double* frame = wave.samples.data() + t * layout.hop;
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < layout.frame_len; ++i) buf[i] = frame[i] * window[i];
    fft.fwd(spec, buf);
    for (std::size_t k = 0; k <= nfft / 2; ++k) power[k] = std::norm(spec[k]);
    for (int b = 0; b < p.n_bands; ++b) {
      double e = 0.0;
      for (const auto& [k, w] : weights[b]) e += w * power[k];
      out[t][b] = std::log(std::max(e, kLogEnergyFloor));
    }
  }
  return out;
}

inline BandMatrix band_energies(const AudioClip& clip, const SpeciesProfile& p) {
  return band_energies(Waveform::from_clip(clip), p);
}

struct F0Track {
  std::vector<std::optional<double>> f0_hz;  // set on voiced frames only
  std::vector<bool> voiced;

  std::size_t voiced_count() const { return std::size_t(std::count(voiced.begin(), voiced.end(), true)); }
};

namespace detail {

/// Normalised autocorrelation of a zero-mean frame at integer lag.
inline double normalized_autocorr(std::span<const double> x, std::size_t lag) {
  if (lag >= x.size()) return 0.0;
  const std::size_t n = x.size() - lag;
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xy += x[i] * x[i + lag];
    xx += x[i] * x[i];
    yy += x[i + lag] * x[i + lag];
  }
  const double den = std::sqrt(xx * yy);
  return den > 0.0 ? xy / den : 0.0;
}

/// Vertex offset of the parabola through (-1, a), (0, b), (1, c).
inline double parabolic_offset(double a, double b, double c) {
  const double den = a - 2.0 * b + c;
  if (den >= 0.0) return 0.0;
  return std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
}

/// Interpolated peak lag near `center` (searching +/- `radius` integer lags).
inline std::pair<double, double> refine_peak(std::span<const double> x, std::size_t center,
                                             std::size_t radius) {
  const std::size_t lo = center > radius + 1 ? center - radius : 1;
  const std::size_t hi = std::min(center + radius, x.size() - 2);
  std::size_t best = lo;
  double best_r = -2.0;
  for (std::size_t l = lo; l <= hi; ++l) {
    const double r = normalized_autocorr(x, l);
    if (r > best_r) {
      best_r = r;
      best = l;
    }
  }
  const double off = parabolic_offset(normalized_autocorr(x, best - 1), best_r,
                                      normalized_autocorr(x, best + 1));
  return {double(best) + off, best_r};
}

/// Period (in samples) of a zero-mean frame, or nullopt when no
/// autocorrelation peak in [min_lag, max_lag] reaches `threshold`.
inline std::optional<double> frame_period(std::span<const double> x, std::size_t min_lag,
                                          std::size_t max_lag, double threshold) {
  max_lag = std::min(max_lag, x.size() / 2);
  if (min_lag < 2 || min_lag > max_lag) return std::nullopt;
  std::vector<double> r(max_lag + 2);
  for (std::size_t l = min_lag - 1; l <= max_lag + 1; ++l) r[l] = normalized_autocorr(x, l);

  double best = -2.0;
  for (std::size_t l = min_lag; l <= max_lag; ++l) {
    if (r[l] >= r[l - 1] && r[l] >= r[l + 1]) best = std::max(best, r[l]);
  }
  if (best < threshold) return std::nullopt;

  // Shortest-lag peak within 10% of the best one, so that period multiples
  // inside the search range do not win over the fundamental.
  std::size_t lag = 0;
  for (std::size_t l = min_lag; l <= max_lag; ++l) {
    if (r[l] >= r[l - 1] && r[l] >= r[l + 1] && r[l] >= threshold && r[l] >= 0.9 * best) {
      lag = l;
      break;
    }
  }
  double period = double(lag) + parabolic_offset(r[lag - 1], r[lag], r[lag + 1]);

  // Short lags resolve the period coarsely; re-measure at doubling period
  // multiples while the frame stays periodic there.
  const std::size_t limit = x.size() / 2;
  for (std::size_t k = 2; double(k) * period + 2.0 <= double(limit); k *= 2) {
    const auto center = std::size_t(std::lround(double(k) * period));
    const auto [tau, rk] = refine_peak(x, center, 2);
    if (rk < threshold) break;
    period = tau / double(k);
  }
  return period;
}

}  // namespace detail

/// Per-frame F0 by normalised autocorrelation over the profile's F0 search
/// lags. A frame is voiced when its peak reaches the voicing threshold and
/// its RMS is at least 1% of the clip RMS.
inline F0Track f0_track(const Waveform& wave, const SpeciesProfile& p) {
  const auto layout = detail::layout_for(wave, p);
  const double fs = wave.sample_rate_hz;
  const double clip_rms = detail::rms(wave.samples);
  const auto min_lag = std::size_t(std::ceil(fs / p.f0_hi_hz));
  const auto max_lag = std::size_t(std::floor(fs / p.f0_lo_hz));

  F0Track track;
  track.f0_hz.resize(layout.n_frames);
  track.voiced.assign(layout.n_frames, false);
  std::vector<double> frame(layout.frame_len);
  for (std::size_t t = 0; t < layout.n_frames; ++t) {
    const double* src = wave.samples.data() + t * layout.hop;
    double mean = 0.0;
    for (std::size_t i = 0; i < layout.frame_len; ++i) mean += src[i];
    mean /= double(layout.frame_len);
    for (std::size_t i = 0; i < layout.frame_len; ++i) frame[i] = src[i] - mean;

    if (clip_rms <= 0.0 || detail::rms(std::span<const double>(src, layout.frame_len)) < 0.01 * clip_rms) {
      continue;
    }
    if (auto period = detail::frame_period(frame, min_lag, max_lag, p.voicing_threshold)) {
      track.voiced[t] = true;
      track.f0_hz[t] = fs / *period;
    }
  }
  return track;
}

inline F0Track f0_track(const AudioClip& clip, const SpeciesProfile& p) {
  return f0_track(Waveform::from_clip(clip), p);
}

struct Prosody {
  double repetition_rate_hz = 0.0;
  double am_depth = 0.0;
};

/// Per-frame RMS envelope.
inline std::vector<double> energy_envelope(const Waveform& wave, const FrameLayout& layout) {
  std::vector<double> env(layout.n_frames);
  for (std::size_t t = 0; t < layout.n_frames; ++t) {
    env[t] = detail::rms(std::span<const double>(wave.samples.data() + t * layout.hop, layout.frame_len));
  }
  return env;
}

namespace detail {

inline std::size_t edge_margin(const FrameLayout& l) { return (l.frame_len + l.hop - 1) / l.hop; }

// `margin` voiced frames on each side (ceil(frame / hop)) guarantee a frame's
// window lies wholly inside a burst.
inline Prosody prosody_from(const std::vector<double>& env, const std::vector<bool>& voiced,
                            double duration_s, std::size_t margin) {
  Prosody out;
  const double env_max = env.empty() ? 0.0 : *std::max_element(env.begin(), env.end());
  if (!(env_max > 0.0)) return out;
  const double thr = 0.5 * env_max;
  int onsets = 0;
  double prev = 0.0;
  for (double e : env) {
    if (prev < thr && e >= thr) ++onsets;
    prev = e;
  }
  out.repetition_rate_hz = onsets / duration_s;

  // Frames whose window straddles a burst edge are skipped unless no voiced
  // frame lies wholly inside a burst.
  const auto interior = [&](std::size_t t) {
    if (t < margin || t + margin >= env.size()) return false;
    for (std::size_t k = t - margin; k <= t + margin; ++k) {
      if (!voiced[k]) return false;
    }
    return true;
  };
  bool use_interior = false;
  for (std::size_t t = 0; t < env.size() && !use_interior; ++t) use_interior = interior(t);
  double vmax = 0.0, vmin = 0.0;
  bool any = false;
  for (std::size_t t = 0; t < env.size(); ++t) {
    if (use_interior ? !interior(t) : !voiced[t]) continue;
    vmax = any ? std::max(vmax, env[t]) : env[t];
    vmin = any ? std::min(vmin, env[t]) : env[t];
    any = true;
  }
  if (any && vmax + vmin > 0.0) out.am_depth = std::clamp((vmax - vmin) / (vmax + vmin), 0.0, 1.0);
  return out;
}

}  // namespace detail

/// Repetition rate (envelope onsets per second; an onset is an upward
/// crossing of half the envelope maximum, counting a clip that starts above
/// it) and AM depth over the voiced frames (burst interiors when present).
inline Prosody prosody(const Waveform& wave, const SpeciesProfile& p) {
  const auto layout = detail::layout_for(wave, p);
  const auto track = f0_track(wave, p);
  return detail::prosody_from(energy_envelope(wave, layout), track.voiced, wave.duration_s(),
                              detail::edge_margin(layout));
}

inline Prosody prosody(const AudioClip& clip, const SpeciesProfile& p) {
  return prosody(Waveform::from_clip(clip), p);
}

/// F0 mapped onto the profile's search span: 0 at f0_lo, 1 at f0_hi.
inline double normalized_f0(double f0_hz, const SpeciesProfile& p) {
  return (f0_hz - p.f0_lo_hz) / (p.f0_hi_hz - p.f0_lo_hz);
}

inline AcousticEmbedding embed_audio(const Waveform& wave, const SpeciesProfile& p) {
  const auto layout = detail::layout_for(wave, p);
  const auto bands = band_energies(wave, p);
  const auto track = f0_track(wave, p);
  const std::size_t n_voiced = track.voiced_count();
  if (n_voiced == 0) throw Error(ErrorCode::NoVoicedFrames, "clip carries no voiced frame");

  const std::size_t nb = std::size_t(p.n_bands);
  std::vector<double> mean(nb, 0.0), sq(nb, 0.0);
  double f0_sum = 0.0;
  for (std::size_t t = 0; t < layout.n_frames; ++t) {
    if (!track.voiced[t]) continue;
    for (std::size_t b = 0; b < nb; ++b) mean[b] += bands[t][b];
    f0_sum += *track.f0_hz[t];
  }
  for (auto& m : mean) m /= double(n_voiced);
  for (std::size_t t = 0; t < layout.n_frames; ++t) {
    if (!track.voiced[t]) continue;
    for (std::size_t b = 0; b < nb; ++b) {
      const double d = bands[t][b] - mean[b];
      sq[b] += d * d;
    }
  }

  // Band means are centred across bands: only the spectral shape is kept,
  // not the recording level.
  const double level = std::accumulate(mean.begin(), mean.end(), 0.0) / double(nb);

  const auto pros = detail::prosody_from(energy_envelope(wave, layout), track.voiced, wave.duration_s(),
                                         detail::edge_margin(layout));

  AcousticEmbedding e;
  e.species = p.species;
  e.voiced_frame_count = int(n_voiced);
  e.vector.reserve(p.embedding_dim());
  for (std::size_t b = 0; b < nb; ++b) e.vector.push_back(mean[b] - level);
  for (std::size_t b = 0; b < nb; ++b) e.vector.push_back(std::sqrt(sq[b] / double(n_voiced)));
  e.vector.push_back(normalized_f0(f0_sum / double(n_voiced), p));
  e.vector.push_back(pros.repetition_rate_hz);
  e.vector.push_back(pros.am_depth);
  return e;
}

inline AcousticEmbedding embed_audio(const AudioClip& clip, const SpeciesProfile& p) {
  return embed_audio(Waveform::from_clip(clip), p);
}

/// Per-coordinate mean and (floored) standard deviation over a set of
/// gallery embeddings.
struct GalleryNormStats {
  std::vector<double> mean;
  std::vector<double> std;

  static GalleryNormStats identity(std::size_t dim) {
    return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  }
};

inline GalleryNormStats compute_norm_stats(std::span<const AcousticEmbedding* const> embeddings,
                                           std::size_t dim) {
  GalleryNormStats s{std::vector<double>(dim, 0.0), std::vector<double>(dim, kNormStdFloor)};
  if (embeddings.empty()) return GalleryNormStats::identity(dim);
  for (const auto* e : embeddings) {
    if (e->vector.size() != dim) throw Error(ErrorCode::DimensionMismatch, "embedding length differs");
    for (std::size_t i = 0; i < dim; ++i) s.mean[i] += e->vector[i];
  }
  for (auto& m : s.mean) m /= double(embeddings.size());
  std::vector<double> var(dim, 0.0);
  for (const auto* e : embeddings) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = e->vector[i] - s.mean[i];
      var[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    s.std[i] = std::max(std::sqrt(var[i] / double(embeddings.size())), kNormStdFloor);
  }
  return s;
}

/// (1 + cos(z(a), z(b))) / 2 with z the per-coordinate normalisation.
inline double acoustic_similarity(const AcousticEmbedding& a, const AcousticEmbedding& b,
                                  const GalleryNormStats& norm) {
  if (!(a.species == b.species)) {
    throw Error(ErrorCode::SpeciesMismatch, a.species.str() + " vs " + b.species.str());
  }
  const std::size_t n = a.vector.size();
  if (b.vector.size() != n || norm.mean.size() != n || norm.std.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "embedding/normaliser lengths differ");
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  bool identical = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double sd = std::max(norm.std[i], kNormStdFloor);
    const double za = (a.vector[i] - norm.mean[i]) / sd;
    const double zb = (b.vector[i] - norm.mean[i]) / sd;
    identical = identical && za == zb;
    ab += za * zb;
    aa += za * za;
    bb += zb * zb;
  }
  if (identical) return 1.0;
  if (aa == 0.0 || bb == 0.0) return 0.5;
  const double cosine = std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
  return std::clamp((1.0 + cosine) / 2.0, 0.0, 1.0);
}

}  // namespace reunite
