// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <fstream>
#include <thread>

#include "reunite/ingest.hpp"
#include "reunite/service.hpp"
#include "reunite/synth.hpp"
#include "support.hpp"

using namespace reunite;
using reunite::test::TempDir;

namespace {

constexpr Timestamp kFixedNow = 1767312000;  // 2026-01-02T00:00:00Z

/// Synthetic store: 10 intake records (the synth gallery) and one lost
/// report per identity, named "lost-<identity>".
GalleryStore make_store(const std::filesystem::path& dir) {
  synth::SynthConfig cfg;
  cfg.set_identity_count(10);
  cfg.n_clusters = 1;
  const auto ds = synth::generate(cfg);
  auto store = GalleryStore::create(dir, ds.visual_dim);
  store.put_many(ds.gallery);
  std::vector<GalleryEntry> reports;
  for (const auto& q : ds.queries) {
    if (q.split != "test") continue;
    GalleryEntry e;
    e.identity = {"lost-" + q.truth_id, q.observation.species, "report for " + q.truth_id};
    e.observations.push_back(q.observation);
    refresh_caches(e);
    reports.push_back(std::move(e));
  }
  store.put_many(std::move(reports));
  return store;
}

/// Server on an ephemeral port, stopped on destruction.
class TestServer {
 public:
  explicit TestServer(api::ReviewService& svc) {
    api::register_routes(server_, svc);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

api::json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return api::json::parse(r->body);
}

std::string decision(const std::string& intake, const std::string& entry) {
  return api::json{{"intake_id", intake}, {"entry_id", entry}}.dump();
}

std::vector<std::string> intake_ids(const api::json& j) {
  std::vector<std::string> ids;
  for (const auto& x : j.at("intakes")) ids.push_back(x.at("entry_id").get<std::string>());
  return ids;
}

}  // namespace

TEST_CASE("HTTP review loop", "[service][http]") {
  TempDir dir;
  auto store = make_store(dir.path());
  api::ReviewService svc(store, MatchConfig{}, [] { return kFixedNow; });
  TestServer server(svc);
  auto cli = server.client();

  auto intakes = body_of(cli.Get("/intakes"));
  REQUIRE(intake_ids(intakes).size() == 10);
  CHECK(intakes["intakes"][0].contains("modalities"));

  const std::string intake = "id-000";
  auto first = cli.Get("/match/" + intake + "?k=3");
  REQUIRE(first);
  CHECK(first->status == 200);
  auto m1 = api::json::parse(first->body);
  REQUIRE(m1["candidates"].size() >= 2);
  CHECK(m1["candidates"].size() <= 3);
  for (std::size_t i = 1; i < m1["candidates"].size(); ++i) {
    CHECK(m1["candidates"][i - 1]["fused"].get<double>() >= m1["candidates"][i]["fused"].get<double>());
  }

  SECTION("match is idempotent and the schema round-trips") {
    auto again = cli.Get("/match/" + intake + "?k=3");
    REQUIRE(again);
    CHECK(again->body == first->body);
    CHECK(api::to_json(api::match_response_from_json(m1)) == m1);
    for (const auto& c : m1["candidates"]) {
      double w = 0.0;
      for (const auto& pm : c["per_modality"]) w += pm["weight"].get<double>();
      CHECK(w == Catch::Approx(1.0));
    }
  }

  SECTION("reject hides the candidate, confirm resolves the intake") {
    const auto top = m1["candidates"][0]["entry_id"].get<std::string>();
    const auto next = m1["candidates"][1]["entry_id"].get<std::string>();
    auto rej = cli.Post("/reject", decision(intake, top), "application/json");
    REQUIRE(rej);
    CHECK(rej->status == 200);
    auto m2 = body_of(cli.Get("/match/" + intake + "?k=3"));
    for (const auto& c : m2["candidates"]) CHECK(c["entry_id"] != top);
    CHECK(m2["candidates"][0]["entry_id"] == next);

    auto conf = cli.Post("/confirm", decision(intake, next), "application/json");
    REQUIRE(conf);
    CHECK(conf->status == 200);
    const auto ids = intake_ids(body_of(cli.Get("/intakes")));
    CHECK(ids.size() == 9);
    CHECK(std::find(ids.begin(), ids.end(), intake) == ids.end());
    auto stats = body_of(cli.Get("/stats"));
    CHECK(stats["confirmed"] == 1);
    CHECK(stats["total"] == 1);

    auto dup = cli.Post("/confirm", decision(intake, next), "application/json");
    REQUIRE(dup);
    CHECK(dup->status == 409);
    CHECK(body_of(cli.Get("/stats"))["total"] == 1);
    auto resolved = cli.Get("/match/" + intake);
    REQUIRE(resolved);
    CHECK(resolved->status == 409);
  }

  SECTION("errors map to HTTP statuses") {
    auto unknown = cli.Get("/match/nobody");
    REQUIRE(unknown);
    CHECK(unknown->status == 404);
    auto report_as_intake = cli.Get("/match/lost-id-000");
    REQUIRE(report_as_intake);
    CHECK(report_as_intake->status == 404);
    for (const char* k : {"0", "abc", "-2", "3x"}) {
      auto bad_k = cli.Get("/match/" + intake + "?k=" + k);
      REQUIRE(bad_k);
      CHECK(bad_k->status == 400);
    }
    auto bad_json = cli.Post("/confirm", "{not json", "application/json");
    REQUIRE(bad_json);
    CHECK(bad_json->status == 400);
    auto wrong_shape = cli.Post("/reject", R"({"intake_id": 3})", "application/json");
    REQUIRE(wrong_shape);
    CHECK(wrong_shape->status == 400);
    auto ghost = cli.Post("/confirm", decision(intake, "ghost"), "application/json");
    REQUIRE(ghost);
    CHECK(ghost->status == 404);
    auto no_audio = cli.Get("/audio/none-such");
    REQUIRE(no_audio);
    CHECK(no_audio->status == 404);
  }

  SECTION("audio is served as WAV") {
    std::optional<std::string> url;
    for (const auto& c : m1["candidates"]) {
      if (c.contains("audio_url")) url = c["audio_url"].get<std::string>();
    }
    REQUIRE(url);
    auto wav_res = cli.Get(*url);
    REQUIRE(wav_res);
    CHECK(wav_res->status == 200);
    CHECK(wav_res->get_header_value("Content-Type") == "audio/wav");
    const auto clip = wav::decode(wav_res->body);
    CHECK(clip.samples.size() > 0);
  }
}

TEST_CASE("stats over 14 confirmed and 9 not found", "[service]") {
  TempDir dir;
  auto store = GalleryStore::create(dir.path(), 2);
  for (int i = 0; i < 23; ++i) {
    GalleryEntry e;
    e.identity = {"r" + std::to_string(i), Species::dog(), ""};
    Observation o;
    o.obs_id = e.identity.id + "-0";
    o.role = Role::LostReport;
    o.species = Species::dog();
    o.visual = VisualFeature{{0.0, 1.0}};
    e.observations.push_back(o);
    store.put(e);
    store.mark_resolved(e.identity.id, i < 14 ? Outcome::Confirmed : Outcome::NotFound);
  }
  api::ReviewService svc(store, MatchConfig{});
  const auto s = svc.stats();
  CHECK(s["confirmed"] == 14);
  CHECK(s["not_found"] == 9);
  CHECK(std::abs(s["success_rate"].get<double>() - 0.6087) < 1e-4);
}

TEST_CASE("match with no eligible candidate returns an empty list", "[service]") {
  TempDir dir;
  auto store = GalleryStore::create(dir.path(), 2);
  GalleryEntry e;
  e.identity = {"int-1", Species::dog(), ""};
  Observation o;
  o.obs_id = "int-1-0";
  o.role = Role::Intake;
  o.species = Species::dog();
  o.visual = VisualFeature{{0.0, 1.0}};
  e.observations.push_back(o);
  store.put(e);
  api::ReviewService svc(store, MatchConfig{});
  CHECK(svc.match("int-1", 5).candidates.empty());
}

TEST_CASE("ingest: visual-only intake", "[service][ingest]") {
  TempDir dir;
  auto store = GalleryStore::create(dir / "store", 3);
  std::ofstream(dir / "f.txt") << "0.1, 0.2\n0.3\n";
  IngestRequest req;
  req.role = Role::Intake;
  req.entry_id = "int-1";
  req.species = Species::dog();
  req.feature_path = (dir / "f.txt").string();
  const auto res = ingest(store, req);
  CHECK(res.entry_id == "int-1");
  CHECK(res.warnings.empty());
  const auto* e = store.snapshot().find("int-1");
  REQUIRE(e != nullptr);
  CHECK(!e->observations[0].audio);
  CHECK(!e->acoustic);
  CHECK(e->appearance->mean == std::vector<double>{0.1, 0.2, 0.3});
}

TEST_CASE("ingest: silent WAV becomes a warning", "[service][ingest]") {
  TempDir dir;
  auto store = GalleryStore::create(dir / "store", 3);
  std::ofstream(dir / "f.txt") << "0.1 0.2 0.3";
  wav::write_file((dir / "quiet.wav").string(), test::to_clip(test::silence(16000.0, 1.0)));
  IngestRequest req;
  req.role = Role::LostReport;
  req.entry_id = "lost-1";
  req.species = Species::dog();
  req.feature_path = (dir / "f.txt").string();
  req.wav_path = (dir / "quiet.wav").string();
  req.context = ContextMeta{40.0, -75.0, 1767225600};
  const auto res = ingest(store, req);
  REQUIRE(res.warnings.size() == 1);
  const auto* e = store.snapshot().find("lost-1");
  CHECK(!e->observations[0].audio);
  CHECK(e->observations[0].visual);
  CHECK(e->observations[0].context);
  CHECK(!e->acoustic);
}

TEST_CASE("ingest: tri-modal report caches the direct embedding", "[service][ingest]") {
  TempDir dir;
  auto store = GalleryStore::create(dir / "store", 3);
  std::ofstream(dir / "f.txt") << "0.1 0.2 0.3";
  synth::IdentityLatent lat;
  lat.f0_base_hz = 1400.0;
  lat.rep_rate_hz = 3.0;
  lat.am_depth_base = 0.2;
  lat.band_tilt = 0.5;
  const auto clip = synth::synth_vocalization(lat, Species::dog(), 2.0, 30.0, 5);
  wav::write_file((dir / "bark.wav").string(), clip);
  IngestRequest req;
  req.role = Role::LostReport;
  req.entry_id = "lost-1";
  req.species = Species::dog();
  req.feature_path = (dir / "f.txt").string();
  req.wav_path = (dir / "bark.wav").string();
  req.context = ContextMeta{40.0, -75.0, 1767225600};
  CHECK(ingest(store, req).warnings.empty());

  auto reopened = GalleryStore::open(dir / "store");
  const auto* e = reopened.snapshot().find("lost-1");
  REQUIRE(e->acoustic);
  CHECK(e->acoustic->vector == embed_audio(clip, default_profile(Species::dog())).vector);
  for (auto m : kAllModalities) CHECK(e->observations[0].has(m));

  // A second observation appends; a species change is refused.
  req.obs_id = "lost-1-extra";
  req.wav_path.clear();
  ingest(store, req);
  CHECK(store.snapshot().find("lost-1")->observations.size() == 2);
  req.species = Species::puppy();
  CHECK_THROWS_AS(ingest(store, req), Error);
}

TEST_CASE("ingest rejects malformed feature files", "[service][ingest]") {
  TempDir dir;
  std::ofstream(dir / "bad.txt") << "0.1 zebra";
  std::ofstream(dir / "empty.txt") << "\n";
  for (const char* name : {"bad.txt", "empty.txt"}) {
    try {
      read_feature_file((dir / name).string());
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
    }
  }
}

TEST_CASE("WAV codec round-trip and rejection", "[service][wav]") {
  AudioClip c;
  c.sample_rate_hz = 8000;
  c.samples = {1, -1, 32767, -32768, 0};
  const auto bytes = wav::encode(c);
  const auto back = wav::decode(bytes);
  CHECK(back.samples == c.samples);
  CHECK(back.sample_rate_hz == 8000);
  CHECK_THROWS_AS(wav::decode("RIFF...."), Error);
}
