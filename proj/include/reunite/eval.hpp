// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

// Retrieval metrics (CMC, Rank-k, false-negative rate at a precision-
// calibrated threshold) and the visual-only vs multi-modal ablation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reunite/error.hpp"
#include "reunite/fusion.hpp"
#include "reunite/serialize.hpp"
#include "reunite/synth.hpp"

namespace reunite::eval {

using io::json;

/// One query's outcome: the full ranked gallery with fused scores.
struct RankedResult {
  std::string truth_id;
  std::vector<std::string> ranked_ids;
  std::vector<double> fused;
  bool ambiguous = false;

  /// 1-based rank of the truth, 0 if absent.
  int truth_rank() const {
    for (std::size_t i = 0; i < ranked_ids.size(); ++i) {
      if (ranked_ids[i] == truth_id) return int(i) + 1;
    }
    return 0;
  }
};

/// cmc[k-1] = fraction of queries whose truth is ranked <= k.
inline std::vector<double> cmc_curve(const std::vector<RankedResult>& results, int K) {
  std::vector<double> cmc(std::size_t(std::max(K, 0)), 0.0);
  if (results.empty() || K <= 0) return cmc;
  std::vector<int> hits(cmc.size(), 0);
  for (const auto& r : results) {
    const int rank = r.truth_rank();
    if (rank == 0) throw Error(ErrorCode::MissingTruth, "true id '" + r.truth_id + "' missing from ranking");
    for (int k = rank; k <= K; ++k) hits[std::size_t(k - 1)]++;
  }
  for (std::size_t k = 0; k < cmc.size(); ++k) cmc[k] = double(hits[k]) / double(results.size());
  return cmc;
}

/// A false negative is a query whose truth is not returned at rank 1 with a
/// fused score of at least tau.
inline double fnr(const std::vector<RankedResult>& results, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorCode::InvalidTau, "tau must lie in [0,1]");
  if (results.empty()) return 0.0;
  int misses = 0;
  for (const auto& r : results) {
    const bool hit = !r.ranked_ids.empty() && r.ranked_ids.front() == r.truth_id && r.fused.front() >= tau;
    misses += hit ? 0 : 1;
  }
  return double(misses) / double(results.size());
}

/// Smallest tau whose accepted rank-1 answers (fused >= tau) reach the target
/// precision. Candidate thresholds are the observed rank-1 scores; if none
/// qualifies the result is 1.0.
inline double calibrate_tau(const std::vector<RankedResult>& calibration, double target_precision = 0.95) {
  std::vector<std::pair<double, bool>> top;
  for (const auto& r : calibration) {
    if (!r.ranked_ids.empty()) top.emplace_back(r.fused.front(), r.ranked_ids.front() == r.truth_id);
  }
  std::set<double> thresholds;
  for (const auto& [s, ok] : top) thresholds.insert(s);
  for (double tau : thresholds) {
    int accepted = 0, correct = 0;
    for (const auto& [s, ok] : top) {
      if (s >= tau) {
        ++accepted;
        correct += ok ? 1 : 0;
      }
    }
    if (accepted > 0 && double(correct) / accepted >= target_precision) return tau;
  }
  return 1.0;
}

struct Condition {
  std::string name;
  std::set<Modality> modalities;
};

inline std::vector<Condition> default_conditions() {
  return {{"visual_only", {Modality::Visual}},
          {"visual_context", {Modality::Visual, Modality::Context}},
          {"full", {Modality::Visual, Modality::Acoustic, Modality::Context}}};
}

inline Condition parse_condition(const std::string& name) {
  for (auto& c : default_conditions()) {
    if (c.name == name) return c;
  }
  throw Error(ErrorCode::ParseError, "unknown condition '" + name + "'");
}

struct ConditionReport {
  std::string name;
  double rank1 = 0.0;
  double rank5 = 0.0;
  std::vector<double> cmc;
  double tau = 1.0;
  double fnr_at_tau = 0.0;
  double ambiguous_subset_rank1 = 0.0;
};

struct EvalReport {
  std::vector<ConditionReport> conditions;
  int n_queries = 0;
  int n_ambiguous = 0;
  int n_calibration = 0;
  int K = 10;
  double target_precision = 0.95;
  double relative_fnr_reduction = 0.0;  // full vs visual_only
  double ambiguous_rank1_gain = 0.0;    // full minus visual_only
  std::string config_digest;

  const ConditionReport* find(const std::string& name) const {
    for (const auto& c : conditions) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

struct AblationOptions {
  std::vector<Condition> conditions = default_conditions();
  int K = 10;
  double target_precision = 0.95;
};

/// Digest of everything the report depends on: dataset records and the
/// matching configuration.
inline std::string config_digest(const synth::Dataset& ds, const MatchConfig& cfg, const AblationOptions& opt) {
  std::string text;
  for (const auto& e : ds.gallery) text += io::to_json(e).dump();
  for (const auto& q : ds.queries) {
    text += synth::to_json(q).dump();
    if (q.observation.audio) text += io::crc32_hex(wav::encode(*q.observation.audio));
  }
  json c = {{"alpha", cfg.alpha},
            {"v_max_km_per_day", cfg.v_max_km_per_day},
            {"d0_km", cfg.d0_km},
            {"sigma0", cfg.visual.sigma0},
            {"kappa_per_day", cfg.visual.kappa_per_day},
            {"query_var", cfg.visual.query_var},
            {"decay_visual", cfg.decay.lambda(Modality::Visual)},
            {"decay_acoustic", cfg.decay.lambda(Modality::Acoustic)},
            {"decay_context", cfg.decay.lambda(Modality::Context)},
            {"decay_floor", cfg.decay.floor},
            {"K", opt.K},
            {"target_precision", opt.target_precision}};
  json conds = json::array();
  for (const auto& cond : opt.conditions) conds.push_back(cond.name);
  c["conditions"] = conds;
  return io::crc32_hex(text + c.dump());
}

/// Ranks every query of one split under one modality condition.
inline std::vector<RankedResult> rank_queries(const std::vector<MatchQuery>& queries,
                                              const std::vector<const synth::QueryRecord*>& records,
                                              const GalleryView& view, const MatchConfig& base,
                                              const Condition& cond) {
  MatchConfig cfg = base;
  cfg.enabled = cond.modalities;
  std::vector<RankedResult> out;
  out.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    RankedResult r;
    r.truth_id = records[i]->truth_id;
    r.ambiguous = records[i]->ambiguous();
    for (const auto& c : match(queries[i], view, -1, cfg)) {
      r.ranked_ids.push_back(c.entry_id);
      r.fused.push_back(c.fused);
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Runs match() under each condition; tau is calibrated per condition on the
/// calibration split and applied to the test split.
inline EvalReport run_ablation(const synth::Dataset& ds, const MatchConfig& cfg, const AblationOptions& opt = {}) {
  const auto view = GalleryView::from_entries(ds.gallery, ds.visual_dim);

  std::vector<MatchQuery> test_q, calib_q;
  std::vector<const synth::QueryRecord*> test_r, calib_r;
  for (const auto& q : ds.queries) {
    auto mq = make_query(q.observation, cfg.profiles);
    if (q.split == "calibration") {
      calib_q.push_back(std::move(mq));
      calib_r.push_back(&q);
    } else {
      test_q.push_back(std::move(mq));
      test_r.push_back(&q);
    }
  }

  EvalReport rep;
  rep.K = opt.K;
  rep.target_precision = opt.target_precision;
  rep.n_queries = int(test_q.size());
  rep.n_calibration = int(calib_q.size());
  for (const auto* r : test_r) rep.n_ambiguous += r->ambiguous() ? 1 : 0;
  rep.config_digest = config_digest(ds, cfg, opt);

  for (const auto& cond : opt.conditions) {
    const auto test = rank_queries(test_q, test_r, view, cfg, cond);
    const auto calib = rank_queries(calib_q, calib_r, view, cfg, cond);
    ConditionReport cr;
    cr.name = cond.name;
    cr.cmc = cmc_curve(test, opt.K);
    cr.rank1 = cr.cmc.empty() ? 0.0 : cr.cmc[0];
    cr.rank5 = cr.cmc.size() >= 5 ? cr.cmc[4] : (cr.cmc.empty() ? 0.0 : cr.cmc.back());
    cr.tau = calib.empty() ? 0.0 : calibrate_tau(calib, opt.target_precision);
    cr.fnr_at_tau = fnr(test, cr.tau);
    std::vector<RankedResult> amb;
    for (const auto& r : test) {
      if (r.ambiguous) amb.push_back(r);
    }
    cr.ambiguous_subset_rank1 = amb.empty() ? 0.0 : cmc_curve(amb, 1)[0];
    rep.conditions.push_back(std::move(cr));
  }

  const auto* vis = rep.find("visual_only");
  const auto* full = rep.find("full");
  if (vis && full) {
    rep.relative_fnr_reduction = vis->fnr_at_tau > 0.0 ? 1.0 - full->fnr_at_tau / vis->fnr_at_tau : 0.0;
    rep.ambiguous_rank1_gain = full->ambiguous_subset_rank1 - vis->ambiguous_subset_rank1;
  }
  return rep;
}

inline constexpr const char* kReportNote =
    "Thresholds in this benchmark are directional targets on synthetic data; "
    "no externally reported accuracy figure is reproduced.";

inline json to_json(const EvalReport& r) {
  json conds = json::array();
  for (const auto& c : r.conditions) {
    conds.push_back({{"name", c.name},
                     {"rank1", c.rank1},
                     {"rank5", c.rank5},
                     {"cmc", c.cmc},
                     {"tau", c.tau},
                     {"fnr_at_tau", c.fnr_at_tau},
                     {"ambiguous_subset_rank1", c.ambiguous_subset_rank1}});
  }
  return {{"note", kReportNote},
          {"n_queries", r.n_queries},
          {"n_ambiguous", r.n_ambiguous},
          {"n_calibration", r.n_calibration},
          {"K", r.K},
          {"target_precision", r.target_precision},
          {"conditions", conds},
          {"relative_fnr_reduction", r.relative_fnr_reduction},
          {"ambiguous_rank1_gain", r.ambiguous_rank1_gain},
          {"config_digest", r.config_digest}};
}

inline std::string summary_table(const EvalReport& r) {
  std::ostringstream os;
  char buf[160];
  os << "# " << kReportNote << "\n";
  std::snprintf(buf, sizeof buf, "queries=%d ambiguous=%d calibration=%d digest=%s\n", r.n_queries, r.n_ambiguous,
                r.n_calibration, r.config_digest.c_str());
  os << buf;
  std::snprintf(buf, sizeof buf, "%-16s %8s %8s %10s %8s %10s\n", "condition", "rank1", "rank5", "amb_rank1", "tau",
                "fnr@tau");
  os << buf;
  for (const auto& c : r.conditions) {
    std::snprintf(buf, sizeof buf, "%-16s %8.4f %8.4f %10.4f %8.4f %10.4f\n", c.name.c_str(), c.rank1, c.rank5,
                  c.ambiguous_subset_rank1, c.tau, c.fnr_at_tau);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "ambiguous rank-1 gain (full - visual_only): %.4f\n", r.ambiguous_rank1_gain);
  os << buf;
  std::snprintf(buf, sizeof buf, "relative FNR reduction (full vs visual_only): %.4f\n", r.relative_fnr_reduction);
  os << buf;
  return os.str();
}

/// One-sided exact sign test: P(X >= wins) for X ~ Binomial(n, 1/2).
inline double sign_test_p(int wins, int n) {
  if (n <= 0) return 1.0;
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  return std::min(1.0, p);
}

struct SeedSweep {
  std::vector<std::uint64_t> seeds;
  std::vector<double> gains;  // ambiguous-subset rank-1, full minus visual_only
  int improved = 0;
  int worsened = 0;
  double mean_gain = 0.0;
  double p_value = 1.0;  // sign test over non-tied seeds
};

/// Regenerates the synthetic benchmark per seed and compares full against
/// visual-only rank-1 on the ambiguous subset.
inline SeedSweep seed_sweep(const std::vector<std::uint64_t>& seeds, synth::SynthConfig scfg, const MatchConfig& mcfg) {
  SeedSweep sw;
  AblationOptions opt;
  opt.conditions = {parse_condition("visual_only"), parse_condition("full")};
  for (auto seed : seeds) {
    scfg.seed = seed;
    const auto rep = run_ablation(synth::generate(scfg), mcfg, opt);
    const double g = rep.ambiguous_rank1_gain;
    sw.seeds.push_back(seed);
    sw.gains.push_back(g);
    sw.improved += g > 0.0 ? 1 : 0;
    sw.worsened += g < 0.0 ? 1 : 0;
    sw.mean_gain += g;
  }
  if (!seeds.empty()) sw.mean_gain /= double(seeds.size());
  sw.p_value = sign_test_p(sw.improved, sw.improved + sw.worsened);
  return sw;
}

inline json to_json(const SeedSweep& s) {
  return {{"seeds", s.seeds},          {"ambiguous_rank1_gain", s.gains}, {"improved", s.improved},
          {"worsened", s.worsened},    {"mean_gain", s.mean_gain},        {"sign_test_p", s.p_value}};
}

}  // namespace reunite::eval
