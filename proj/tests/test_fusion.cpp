// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "fusion_properties.hpp"
#include "reunite/fusion.hpp"
#include "reunite/ingest.hpp"
#include "reunite/synth.hpp"

using namespace reunite;

namespace {

ModalityScore avail(Modality m, double s, double q = 1.0, double r = 1.0) { return {m, s, true, q, r}; }
ModalityScore missing(Modality m) { return {m, 0.0, false, 1.0, 1.0}; }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("context kernel examples", "[fusion][context]") {
  const ContextMeta a{40.0, -75.0, 0};
  CHECK(context_similarity(a, a, 0.0) == 1.0);
  // 10 km due north.
  const double dlat = 10.0 / (kEarthRadiusKm * std::numbers::pi / 180.0);
  const ContextMeta b{40.0 + dlat, -75.0, 0};
  CHECK(great_circle_km(a.lat_deg, a.lon_deg, b.lat_deg, b.lon_deg) == Catch::Approx(10.0));
  CHECK(context_similarity(a, b, 0.0) == Catch::Approx(std::exp(-2.0)));
  CHECK(context_similarity(a, b, 0.0) == Catch::Approx(0.1353).margin(1e-4));
  CHECK(context_similarity(a, b, 5.0) == Catch::Approx(1.0));
}

TEST_CASE("visual ambiguity examples", "[fusion][ambiguity]") {
  CHECK(visual_ambiguity(std::vector<double>{0.9, 0.3}) == Catch::Approx(0.4));
  CHECK(visual_ambiguity(std::vector<double>{0.8, 0.8}) == 1.0);
  CHECK(visual_ambiguity(std::vector<double>{0.7}) == 0.0);
  CHECK(visual_ambiguity(std::vector<double>{0.2, 0.95, 0.1, 0.6}) == Catch::Approx(0.65));
}

TEST_CASE("attention weight examples", "[fusion][attention]") {
  const std::vector<ModalityScore> all{avail(Modality::Visual, 0.5), avail(Modality::Acoustic, 0.5),
                                       avail(Modality::Context, 0.5)};
  auto a = attention_weights(all, 0.0, 0.5);
  CHECK(a.at(Modality::Visual) == 1.0);
  CHECK(a.at(Modality::Acoustic) == 1.0);
  CHECK(a.at(Modality::Context) == 1.0);
  a = attention_weights(all, 1.0, 0.5);
  CHECK(a.at(Modality::Visual) == 0.5);
  CHECK(a.at(Modality::Acoustic) == 1.0);
  CHECK(a.at(Modality::Context) == 1.0);

  const std::vector<ModalityScore> none{missing(Modality::Visual), missing(Modality::Acoustic),
                                        missing(Modality::Context)};
  CHECK(code_of([&] { attention_weights(none, 0.0); }) == ErrorCode::NoUsableModality);
}

TEST_CASE("fuse examples", "[fusion][fuse]") {
  const std::vector<ModalityScore> two{avail(Modality::Visual, 0.8), avail(Modality::Acoustic, 0.9),
                                       missing(Modality::Context)};
  CHECK(fuse(two, {{Modality::Visual, 1.0}, {Modality::Acoustic, 1.0}, {Modality::Context, 0.0}}) ==
        Catch::Approx(0.85));
  CHECK(fuse(two, {{Modality::Visual, 0.5}, {Modality::Acoustic, 1.0}, {Modality::Context, 0.0}}) ==
        Catch::Approx(1.3 / 1.5));
  const std::vector<ModalityScore> one{avail(Modality::Visual, 0.7), missing(Modality::Acoustic),
                                       missing(Modality::Context)};
  CHECK(fuse(one, attention_weights(one, 0.3)) == Catch::Approx(0.7));
}

TEST_CASE("identical gallery features match perfectly", "[fusion][match]") {
  GalleryEntry e;
  e.identity = {"lost-1", Species::dog(), "Rex"};
  Observation o;
  o.obs_id = "lost-1-0";
  o.role = Role::LostReport;
  o.species = Species::dog();
  o.visual = VisualFeature{std::vector<double>(4, 0.3)};
  e.observations.push_back(o);
  refresh_caches(e);
  const auto view = GalleryView::from_entries({e}, 4);

  Observation q = o;
  q.obs_id = "q";
  q.role = Role::Intake;
  const auto ranked = match(q, view, 5);
  REQUIRE(ranked.size() == 1);
  CHECK(ranked[0].entry_id == "lost-1");
  CHECK(ranked[0].rank == 1);
  CHECK(ranked[0].fused == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("audio-only query against photo-only gallery", "[fusion][match]") {
  GalleryEntry e;
  e.identity = {"lost-1", Species::dog(), ""};
  Observation o;
  o.obs_id = "lost-1-0";
  o.role = Role::LostReport;
  o.species = Species::dog();
  o.visual = VisualFeature{std::vector<double>(4, 0.3)};
  e.observations.push_back(o);
  refresh_caches(e);
  const auto view = GalleryView::from_entries({e}, 4);

  MatchQuery q;
  q.query_id = "q";
  q.role = Role::Intake;
  q.species = Species::dog();
  q.acoustic = AcousticEmbedding{std::vector<double>(27, 0.1), Species::dog(), 3};
  CHECK(code_of([&] { match(q, view, 5); }) == ErrorCode::NoUsableModality);

  const std::vector<ModalityScore> pair{missing(Modality::Visual), missing(Modality::Acoustic),
                                        missing(Modality::Context)};
  CHECK(code_of([&] { attention_weights(pair, 0.0); }) == ErrorCode::NoUsableModality);
}

TEST_CASE("eligibility: species, role, resolution, exclusions", "[fusion][match]") {
  auto make = [](const std::string& id, Role role, Species s) {
    GalleryEntry e;
    e.identity = {id, s, ""};
    Observation o;
    o.obs_id = id + "-0";
    o.role = role;
    o.species = s;
    o.visual = VisualFeature{std::vector<double>(2, 0.0)};
    e.observations.push_back(o);
    refresh_caches(e);
    return e;
  };
  auto resolved = make("done", Role::LostReport, Species::dog());
  resolved.resolved = true;
  auto excluded = make("hidden", Role::LostReport, Species::dog());
  excluded.exclusions.insert("q");
  const auto view = GalleryView::from_entries({make("ok", Role::LostReport, Species::dog()),
                                               make("cat", Role::LostReport, Species::other("cat")),
                                               make("peer", Role::Intake, Species::dog()), resolved, excluded},
                                              2);
  MatchQuery q;
  q.query_id = "q";
  q.role = Role::Intake;
  q.species = Species::dog();
  q.visual = VisualFeature{{0.0, 0.0}};
  const auto ranked = match(q, view, -1);
  REQUIRE(ranked.size() == 1);
  CHECK(ranked[0].entry_id == "ok");

  q.species = Species::elephant();
  CHECK(code_of([&] { match(q, view, -1); }) == ErrorCode::EmptyGallery);
  q.species = Species::dog();
  q.visual = VisualFeature{{0.0, 0.0, 0.0}};
  CHECK(code_of([&] { match(q, view, -1); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("query without audio equals the acoustic channel switched off", "[fusion][match]") {
  synth::SynthConfig sc;
  sc.set_identity_count(12);
  sc.n_clusters = 1;
  const auto ds = synth::generate(sc);
  const auto view = GalleryView::from_entries(ds.gallery, ds.visual_dim);
  MatchConfig no_audio;
  no_audio.enabled.erase(Modality::Acoustic);
  int checked = 0;
  for (const auto& qr : ds.queries) {
    auto obs = qr.observation;
    const auto with_channel_off = match(obs, view, -1, no_audio);
    obs.audio.reset();
    CHECK(props::same_ranking(match(obs, view, -1), with_channel_off));
    ++checked;
  }
  CHECK(checked == 24);
}

TEST_CASE("ambiguous look-alike cluster is resolved by the acoustic channel", "[fusion][scenario]") {
  // Five dogs whose coats differ by far less than the query noise; barks are
  // distinct (F0 8% apart). Context is left out to isolate the acoustic effect.
  const auto profile = default_profile(Species::dog());
  synth::Rng rng(77);
  const std::size_t dim = 16;
  std::vector<double> base(dim);
  for (auto& v : base) v = rng.normal();
  std::vector<GalleryEntry> gallery;
  std::vector<synth::IdentityLatent> latents;
  for (int i = 0; i < 5; ++i) {
    synth::IdentityLatent lat;
    lat.visual_prototype = base;
    for (auto& v : lat.visual_prototype) v += 0.01 * rng.normal();
    lat.f0_base_hz = 1100.0 * std::pow(1.08, i);
    lat.rep_rate_hz = rng.uniform(1.5, 5.0);
    lat.am_depth_base = rng.uniform(0.0, 0.6);
    lat.band_tilt = rng.uniform(0.0, 1.0);
    latents.push_back(lat);

    GalleryEntry e;
    e.identity = {"dog-" + std::to_string(i), Species::dog(), ""};
    Observation o;
    o.obs_id = e.identity.id + "-0";
    o.role = Role::Intake;
    o.species = Species::dog();
    o.visual = VisualFeature{lat.visual_prototype};
    o.audio = synth::synth_vocalization(lat, Species::dog(), 2.0, 30.0, 1000 + i);
    e.observations.push_back(o);
    refresh_caches(e);
    gallery.push_back(e);
  }
  const auto view = GalleryView::from_entries(gallery, dim);

  MatchConfig visual_only;
  visual_only.enabled = {Modality::Visual};
  int promoted = 0;
  for (int truth = 0; truth < 5; ++truth) {
    Observation q;
    q.obs_id = "q";
    q.role = Role::LostReport;
    q.species = Species::dog();
    std::vector<double> v = latents[truth].visual_prototype;
    for (auto& x : v) x += 0.05 * rng.normal();
    q.visual = VisualFeature{v};
    q.audio = synth::synth_vocalization(latents[truth], Species::dog(), 2.0, 30.0, 2000 + truth);

    const auto vis = match(q, view, -1, visual_only);
    REQUIRE(vis.size() == 5);
    // Near-tie: every look-alike's visual score is within a small band.
    CHECK(vis.front().fused - vis.back().fused < 0.5 * vis.front().fused);

    const auto full = match(q, view, -1);
    REQUIRE(full.size() == 5);
    promoted += full.front().entry_id == "dog-" + std::to_string(truth) ? 1 : 0;

    // Brute force: recompute every fused score from its parts.
    for (const auto& c : full) {
      double num = 0.0, den = 0.0;
      for (const auto& s : c.per_modality) {
        if (!s.available) continue;
        double a = s.quality * s.reliability;
        if (s.modality == Modality::Visual) a *= 1.0 - 0.5 * visual_ambiguity([&] {
                                                   std::vector<double> sims;
                                                   for (const auto& o : full) sims.push_back(o.per_modality[0].similarity);
                                                   return sims;
                                                 }());
        num += a * s.similarity;
        den += a;
      }
      CHECK(c.fused == Catch::Approx(num / den).epsilon(1e-12));
    }
  }
  CHECK(promoted == 5);
}

TEST_CASE("API weights sum to one over available modalities", "[fusion][match]") {
  synth::Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto view = props::random_gallery(rng, 4, false, 5);
    const auto q = props::random_query(rng, 4);
    for (const auto& c : match(q, view, -1)) {
      double total = 0.0;
      for (auto m : kAllModalities) total += c.weight(m);
      CHECK(total == Catch::Approx(1.0));
    }
  }
}

TEST_CASE("config file overrides fusion parameters", "[fusion][config]") {
  MatchConfig cfg;
  cfg.apply(KeyValueFile::parse("fusion.alpha = 0.25\ncontext.d0_km = 2\nmatch.k_default = 3\nvisual.sigma0 = 0.1\n"));
  CHECK(cfg.alpha == 0.25);
  CHECK(cfg.d0_km == 2.0);
  CHECK(cfg.k_default == 3);
  CHECK(cfg.visual.sigma0 == 0.1);
  MatchConfig bad;
  CHECK(code_of([&] { bad.apply(KeyValueFile::parse("fusion.alpha = 2\n")); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([&] { bad.apply(KeyValueFile::parse("fusion.alpha = x\n")); }) != ErrorCode::IoError);
}

TEST_CASE("fusion property suites", "[fusion][property]") {
  constexpr int kCases = 10000;
  for (const auto& [name, res] : {std::pair{"monotonicity", props::monotonicity(kCases, 1)},
                                  std::pair{"attention bounds", props::attention_bounds(kCases, 2)},
                                  std::pair{"missing-modality equivalence",
                                            props::missing_modality_equivalence(kCases, 3)},
                                  std::pair{"deterministic order", props::deterministic_order(kCases, 4)}}) {
    CAPTURE(name, res.first_failure);
    CHECK(res.cases == kCases);
    CHECK(res.violations == 0);
  }
}
