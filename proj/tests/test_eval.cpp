// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <algorithm>

#include "reunite/eval.hpp"

using namespace reunite;
using eval::RankedResult;

namespace {

RankedResult at_rank(int rank, int n = 5, double top = 0.9) {
  RankedResult r;
  r.truth_id = "t";
  for (int i = 1; i <= n; ++i) {
    r.ranked_ids.push_back(i == rank ? "t" : "x" + std::to_string(i));
    r.fused.push_back(top - 0.1 * (i - 1));
  }
  return r;
}

}  // namespace

TEST_CASE("CMC examples", "[eval][cmc]") {
  CHECK(eval::cmc_curve({at_rank(1)}, 4) == std::vector<double>{1, 1, 1, 1});
  const auto c = eval::cmc_curve({at_rank(1), at_rank(3)}, 3);
  CHECK(c == std::vector<double>{0.5, 0.5, 1.0});
  try {
    RankedResult r = at_rank(1);
    r.truth_id = "absent";
    eval::cmc_curve({r}, 3);
    FAIL("expected MissingTruth");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingTruth);
  }
}

TEST_CASE("CMC on a three-identity toy gallery matches enumeration", "[eval][cmc]") {
  // Gallery a, b, c; each query scores every identity by hand and the
  // expected rank is counted directly.
  const std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>> queries = {
      {"a", {{"a", 0.9}, {"b", 0.5}, {"c", 0.1}}},
      {"b", {{"a", 0.7}, {"b", 0.6}, {"c", 0.2}}},
      {"c", {{"a", 0.3}, {"b", 0.8}, {"c", 0.1}}},
      {"a", {{"a", 0.4}, {"b", 0.4}, {"c", 0.4}}},  // tie broken by id
  };
  std::vector<RankedResult> results;
  std::vector<int> hand_ranks;
  for (const auto& [truth, scores] : queries) {
    auto sorted = scores;
    std::sort(sorted.begin(), sorted.end(), [](auto& x, auto& y) {
      return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    RankedResult r;
    r.truth_id = truth;
    for (const auto& [id, s] : sorted) {
      r.ranked_ids.push_back(id);
      r.fused.push_back(s);
    }
    results.push_back(r);
    int better = 0;
    for (const auto& [id, s] : scores) {
      const double ts = std::find_if(scores.begin(), scores.end(), [&](auto& p) { return p.first == truth; })->second;
      if (s > ts || (s == ts && id < truth)) ++better;
    }
    hand_ranks.push_back(better + 1);
  }
  CHECK(hand_ranks == std::vector<int>{1, 2, 3, 1});
  CHECK(eval::cmc_curve(results, 3) == std::vector<double>{0.5, 0.75, 1.0});
}

TEST_CASE("FNR edge cases", "[eval][fnr]") {
  CHECK(eval::fnr({at_rank(1), at_rank(1)}, 0.0) == 0.0);
  CHECK(eval::fnr({at_rank(1), at_rank(1, 5, 0.99)}, 1.0) == 1.0);
  CHECK(eval::fnr({at_rank(1), at_rank(2)}, 0.5) == 0.5);
  CHECK_THROWS_AS(eval::fnr({at_rank(1)}, 1.5), Error);
  CHECK_THROWS_AS(eval::fnr({at_rank(1)}, -0.1), Error);
}

TEST_CASE("tau calibration reaches the target precision", "[eval][fnr]") {
  // Top scores 0.9 (right), 0.8 (wrong), 0.7 (right), 0.6 (right).
  std::vector<RankedResult> cal = {at_rank(1, 3, 0.9), at_rank(2, 3, 0.8), at_rank(1, 3, 0.7), at_rank(1, 3, 0.6)};
  CHECK(eval::calibrate_tau(cal, 0.95) == 0.9);
  CHECK(eval::calibrate_tau(cal, 0.75) == 0.6);
  CHECK(eval::calibrate_tau({at_rank(2)}, 0.95) == 1.0);
}

TEST_CASE("sign test", "[eval][stats]") {
  CHECK(eval::sign_test_p(20, 20) == Catch::Approx(std::pow(0.5, 20)));
  CHECK(eval::sign_test_p(15, 20) == Catch::Approx(0.020694).margin(1e-6));
  CHECK(eval::sign_test_p(0, 10) == Catch::Approx(1.0));
}

TEST_CASE("without audio or context every condition reports the same", "[eval][ablation]") {
  synth::SynthConfig sc;
  sc.set_identity_count(20);
  sc.n_clusters = 2;
  auto ds = synth::generate(sc);
  for (auto& q : ds.queries) {
    q.observation.audio.reset();
    q.observation.context.reset();
  }
  const auto rep = eval::run_ablation(ds, MatchConfig{});
  const auto& v = *rep.find("visual_only");
  for (const auto& c : rep.conditions) {
    CHECK(c.cmc == v.cmc);
    CHECK(c.tau == v.tau);
    CHECK(c.fnr_at_tau == v.fnr_at_tau);
    CHECK(c.ambiguous_subset_rank1 == v.ambiguous_subset_rank1);
  }
  CHECK(rep.ambiguous_rank1_gain == 0.0);
}

TEST_CASE("default benchmark regime and report determinism", "[eval][benchmark]") {
  const auto ds = synth::generate({});
  const auto rep = eval::run_ablation(ds, MatchConfig{});
  const auto& v = *rep.find("visual_only");
  const auto& f = *rep.find("full");
  CHECK(rep.n_queries == 60);
  CHECK(rep.n_ambiguous == 20);
  CHECK(v.ambiguous_subset_rank1 >= 0.3);
  CHECK(v.ambiguous_subset_rank1 <= 0.6);
  CHECK(f.ambiguous_subset_rank1 - v.ambiguous_subset_rank1 >= 0.15);
  CHECK(rep.relative_fnr_reduction >= 0.20);
  CHECK(rep.relative_fnr_reduction == Catch::Approx(1.0 - f.fnr_at_tau / v.fnr_at_tau));
  CHECK(eval::to_json(rep).dump() == eval::to_json(eval::run_ablation(ds, MatchConfig{})).dump());

  MatchConfig other;
  other.alpha = 0.25;
  CHECK(eval::run_ablation(ds, other).config_digest != rep.config_digest);
}

TEST_CASE("unknown condition names are rejected", "[eval]") {
  CHECK(eval::parse_condition("full").modalities.size() == 3);
  CHECK_THROWS_AS(eval::parse_condition("audio_only"), Error);
}
