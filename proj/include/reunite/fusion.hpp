// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

// Asymmetry-aware score fusion and gallery ranking.
//
// Each candidate gets up to three per-modality similarities. A modality
// counts only when both the query and the candidate carry it; its attention
// weight is quality x reliability, with the visual weight reduced when the
// visual channel cannot separate the top candidates. The fused score is the
// attention-weighted mean of the available similarities.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "reunite/acoustic.hpp"
#include "reunite/config.hpp"
#include "reunite/error.hpp"
#include "reunite/store.hpp"
#include "reunite/temporal.hpp"
#include "reunite/types.hpp"
#include "reunite/visual.hpp"

namespace reunite {

inline constexpr double kEarthRadiusKm = 6371.0088;

struct ModalityScore {
  Modality modality = Modality::Visual;
  double similarity = 0.0;
  bool available = false;
  double quality = 1.0;
  double reliability = 1.0;
};

struct MatchCandidate {
  std::string entry_id;
  std::vector<ModalityScore> per_modality;
  std::map<Modality, double> attention;
  double fused = 0.0;
  int rank = 0;
  double days_separated = 0.0;

  /// Normalised weight w_m = a_m / sum(a) over available modalities.
  double weight(Modality m) const {
    double total = 0.0;
    for (const auto& s : per_modality) {
      if (s.available) total += attention.at(s.modality);
    }
    for (const auto& s : per_modality) {
      if (s.modality == m && s.available && total > 0.0) return attention.at(m) / total;
    }
    return 0.0;
  }
};

struct MatchConfig {
  VisualConfig visual;
  DecayConfig decay;
  double alpha = 0.5;
  double v_max_km_per_day = 2.0;
  double d0_km = 5.0;
  int k_default = 10;
  // Separation time used when query and candidate carry no timestamps to compare.
  double default_days = 0.0;
  // Modalities allowed to contribute; ablations switch channels off here.
  std::set<Modality> enabled{Modality::Visual, Modality::Acoustic, Modality::Context};
  ProfileTable profiles;

  /// Reads the `fusion.*`, `context.*`, `match.*`, `visual.*` and `decay.*` keys.
  void apply(const KeyValueFile& kv) {
    kv.get("fusion.alpha", alpha);
    kv.get("context.v_max_km_per_day", v_max_km_per_day);
    kv.get("context.d0_km", d0_km);
    kv.get("match.k_default", k_default);
    kv.get("visual.sigma0", visual.sigma0);
    kv.get("visual.kappa_per_day", visual.kappa_per_day);
    kv.get("visual.query_var", visual.query_var);
    decay.apply(kv);
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidConfig, "fusion.alpha outside [0,1]");
    if (!(d0_km > 0.0) || !(v_max_km_per_day >= 0.0)) throw Error(ErrorCode::InvalidConfig, "bad context kernel");
    if (k_default < 1) throw Error(ErrorCode::InvalidConfig, "match.k_default must be >= 1");
  }
};

/// Haversine great-circle distance.
inline double great_circle_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * rad;
  const double dlon = (lon2 - lon1) * rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

/// Travel-feasibility kernel: distance beyond what the individual could
/// cover in `days` decays with length scale d0.
inline double context_similarity(const ContextMeta& q, const ContextMeta& g, double days,
                                 double v_max_km_per_day = 2.0, double d0_km = 5.0) {
  const double d = great_circle_km(q.lat_deg, q.lon_deg, g.lat_deg, g.lon_deg);
  return std::exp(-std::max(0.0, d - v_max_km_per_day * days) / d0_km);
}

/// 1 - (top-1 minus top-2) of the visual similarities; 0 for fewer than two.
inline double visual_ambiguity(std::span<const double> visual_sims) {
  if (visual_sims.size() < 2) return 0.0;
  double first = -1.0, second = -1.0;
  for (double s : visual_sims) {
    if (s > first) {
      second = first;
      first = s;
    } else if (s > second) {
      second = s;
    }
  }
  return std::clamp(1.0 - (first - second), 0.0, 1.0);
}

/// Unnormalised attention a_m = available * q * r, with the visual weight
/// scaled by (1 - alpha * amb).
inline std::map<Modality, double> attention_weights(std::span<const ModalityScore> scores, double amb,
                                                    double alpha = 0.5) {
  std::map<Modality, double> a;
  double total = 0.0;
  for (const auto& s : scores) {
    double w = s.available ? s.quality * s.reliability : 0.0;
    if (s.modality == Modality::Visual) w *= 1.0 - alpha * amb;
    a[s.modality] = w;
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::NoUsableModality, "query and candidate share no usable modality");
  return a;
}

inline double fuse(std::span<const ModalityScore> scores, const std::map<Modality, double>& attention) {
  double num = 0.0, den = 0.0;
  for (const auto& s : scores) {
    if (!s.available) continue;
    auto it = attention.find(s.modality);
    const double a = it == attention.end() ? 0.0 : it->second;
    num += a * s.similarity;
    den += a;
  }
  if (!(den > 0.0)) throw Error(ErrorCode::NoUsableModality, "no attention mass on available modalities");
  return std::clamp(num / den, 0.0, 1.0);
}

/// A query prepared for matching: audio is already embedded.
struct MatchQuery {
  std::string query_id;
  Role role = Role::LostReport;
  Species species;
  std::optional<VisualFeature> visual;
  std::optional<AcousticEmbedding> acoustic;
  std::optional<ContextMeta> context;
  std::map<Modality, double> quality;

  double quality_of(Modality m) const {
    auto it = quality.find(m);
    return it == quality.end() ? 1.0 : it->second;
  }
};

/// Embeds the observation's audio; a clip without voiced frames leaves the
/// acoustic channel absent.
inline MatchQuery make_query(const Observation& obs, const ProfileTable& profiles = {}) {
  MatchQuery q;
  q.query_id = obs.obs_id;
  q.role = obs.role;
  q.species = obs.species;
  q.visual = obs.visual;
  q.context = obs.context;
  q.quality = obs.quality;
  if (obs.audio) {
    try {
      q.acoustic = embed_audio(*obs.audio, profiles.at(obs.species));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoVoicedFrames) throw;
      q.quality.erase(Modality::Acoustic);
    }
  }
  return q;
}

namespace detail {

inline std::optional<ContextMeta> latest_context(const GalleryEntry& e) {
  std::optional<ContextMeta> best;
  for (const auto& o : e.observations) {
    if (o.context && (!best || o.context->observed_at >= best->observed_at)) best = o.context;
  }
  return best;
}

inline double best_quality(const GalleryEntry& e, Modality m) {
  double q = 0.0;
  bool any = false;
  for (const auto& o : e.observations) {
    if (!o.has(m)) continue;
    q = any ? std::max(q, o.quality_of(m)) : o.quality_of(m);
    any = true;
  }
  return any ? q : 1.0;
}

inline std::optional<GaussianAppearance> base_appearance(const GalleryEntry& e) {
  if (e.appearance) return e.appearance;
  std::vector<VisualFeature> feats;
  for (const auto& o : e.observations) {
    if (o.visual) feats.push_back(*o.visual);
  }
  if (feats.empty()) return std::nullopt;
  return fit_appearance(feats, 0.0);
}

}  // namespace detail

/// Query built from a stored record (used when an intake is matched against
/// lost reports): appearance mean, cached embedding, latest context.
inline MatchQuery query_from_entry(const GalleryEntry& e) {
  MatchQuery q;
  q.query_id = e.identity.id;
  q.role = e.role();
  q.species = e.identity.species;
  if (auto g = detail::base_appearance(e)) q.visual = VisualFeature{g->mean};
  q.acoustic = e.acoustic;
  q.context = detail::latest_context(e);
  for (auto m : kAllModalities) {
    const bool present = m == Modality::Visual ? q.visual.has_value()
                         : m == Modality::Acoustic ? q.acoustic.has_value()
                                                   : q.context.has_value();
    if (present) q.quality[m] = detail::best_quality(e, m);
  }
  return q;
}

/// Ranks the view's eligible entries against the query and returns the top k.
/// Eligible: unresolved, same species, opposite role, not excluded for this
/// query. Candidates sharing no usable modality with the query are dropped.
inline std::vector<MatchCandidate> match(const MatchQuery& query, const GalleryView& view, int k,
                                         const MatchConfig& cfg = {}) {
  if (query.visual && query.visual->values.size() != view.visual_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "query visual length differs from store dimensionality");
  }
  std::vector<const GalleryEntry*> pool;
  for (const auto& [id, e] : view) {
    if (e->resolved || !(e->identity.species == query.species) || e->role() == query.role) continue;
    if (id == query.query_id) continue;
    pool.push_back(e.get());
  }
  if (pool.empty()) throw Error(ErrorCode::EmptyGallery, "no eligible gallery entry for " + query.species.str());

  const bool use_visual = cfg.enabled.count(Modality::Visual) && query.visual;
  const bool use_acoustic = cfg.enabled.count(Modality::Acoustic) && query.acoustic;
  const bool use_context = cfg.enabled.count(Modality::Context) && query.context;

  // Acoustic normalisation statistics over the whole eligible pool, so that a
  // reviewer exclusion does not move other candidates' scores.
  std::optional<GalleryNormStats> norm;
  if (use_acoustic) {
    std::vector<const AcousticEmbedding*> embs;
    for (const auto* e : pool) {
      if (e->acoustic && e->acoustic->vector.size() == query.acoustic->vector.size()) embs.push_back(&*e->acoustic);
    }
    norm = compute_norm_stats(embs, query.acoustic->vector.size());
  }

  std::vector<MatchCandidate> cands;
  std::vector<double> visual_sims;
  for (const auto* e : pool) {
    if (e->exclusions.count(query.query_id)) continue;
    MatchCandidate c;
    c.entry_id = e->identity.id;

    const auto g_ctx = detail::latest_context(*e);
    double days = cfg.default_days;
    if (query.context && g_ctx) {
      try {
        days = separation_days(*query.context, g_ctx->observed_at);
      } catch (const Error&) {
        days = 0.0;  // intake predates the report
      }
    }
    c.days_separated = days;

    ModalityScore sv{Modality::Visual}, sa{Modality::Acoustic}, sc{Modality::Context};
    if (use_visual) {
      if (auto g = detail::base_appearance(*e)) {
        sv.available = true;
        sv.similarity = visual_similarity(*query.visual, inflate(*g, days, cfg.visual), cfg.visual);
        visual_sims.push_back(sv.similarity);
      }
    }
    if (use_acoustic && e->acoustic && e->acoustic->vector.size() == query.acoustic->vector.size()) {
      sa.available = true;
      sa.similarity = acoustic_similarity(*query.acoustic, *e->acoustic, *norm);
    }
    if (use_context && g_ctx) {
      sc.available = true;
      sc.similarity = context_similarity(*query.context, *g_ctx, days, cfg.v_max_km_per_day, cfg.d0_km);
    }
    for (auto* s : {&sv, &sa, &sc}) {
      s->quality = s->available ? query.quality_of(s->modality) * detail::best_quality(*e, s->modality) : 0.0;
      s->reliability = reliability(s->modality, days, cfg.decay);
      if (!s->available) s->similarity = 0.0;
    }
    c.per_modality = {sv, sa, sc};
    cands.push_back(std::move(c));
  }

  const double amb = visual_ambiguity(visual_sims);
  std::vector<MatchCandidate> scored;
  for (auto& c : cands) {
    try {
      c.attention = attention_weights(c.per_modality, amb, cfg.alpha);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoUsableModality) continue;
      throw;
    }
    c.fused = fuse(c.per_modality, c.attention);
    scored.push_back(std::move(c));
  }
  if (scored.empty() && !cands.empty()) {
    throw Error(ErrorCode::NoUsableModality, "no candidate shares a usable modality with the query");
  }

  std::sort(scored.begin(), scored.end(), [](const MatchCandidate& a, const MatchCandidate& b) {
    if (a.fused != b.fused) return a.fused > b.fused;
    return a.entry_id < b.entry_id;
  });
  if (k >= 0 && scored.size() > std::size_t(k)) scored.resize(std::size_t(k));
  for (std::size_t i = 0; i < scored.size(); ++i) scored[i].rank = int(i) + 1;
  return scored;
}

inline std::vector<MatchCandidate> match(const Observation& query, const GalleryView& view, int k,
                                         const MatchConfig& cfg = {}) {
  return match(make_query(query, cfg.profiles), view, k, cfg);
}

}  // namespace reunite
