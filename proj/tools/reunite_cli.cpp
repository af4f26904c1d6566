// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "reunite/eval.hpp"
#include "reunite/fusion.hpp"
#include "reunite/ingest.hpp"
#include "reunite/service.hpp"
#include "reunite/store.hpp"
#include "reunite/synth.hpp"

#include <CLI11.hpp>
#include <httplib.h>

namespace {

using namespace reunite;

std::string store_path(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("REUNITE_STORE")) return env;
  throw Error(ErrorCode::InvalidConfig, "no store given (use --store or set REUNITE_STORE)");
}

MatchConfig load_config(const std::string& path) {
  MatchConfig cfg;
  if (!path.empty()) {
    const auto kv = KeyValueFile::load(path);
    cfg.apply(kv);
    cfg.profiles.apply(kv);
  }
  return cfg;
}

/// "1-20", "1,2,5" or a mix such as "1-3,7".
std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    const auto dash = part.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoull(part));
      } else {
        const auto lo = std::stoull(part.substr(0, dash));
        const auto hi = std::stoull(part.substr(dash + 1));
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad seed list '" + spec + "'");
    }
  }
  return out;
}

struct ContextFlags {
  double lat = 0.0, lon = 0.0;
  std::string time;
  CLI::Option* lat_opt = nullptr;
  CLI::Option* lon_opt = nullptr;

  void add(CLI::App* app) {
    lat_opt = app->add_option("--lat", lat, "Latitude in degrees");
    lon_opt = app->add_option("--lon", lon, "Longitude in degrees");
    app->add_option("--time", time, "Observation time, ISO-8601 UTC (e.g. 2026-01-01T12:00:00Z)");
  }

  std::optional<ContextMeta> get() const {
    if (!*lat_opt && !*lon_opt && time.empty()) return std::nullopt;
    if (!*lat_opt || !*lon_opt || time.empty()) {
      throw Error(ErrorCode::ParseError, "context needs --lat, --lon and --time together");
    }
    return ContextMeta{lat, lon, parse_iso8601(time)};
  }
};

void print_candidates(const std::vector<MatchCandidate>& ranked) {
  std::printf("%-5s %-20s %8s %8s %8s %8s\n", "rank", "entry", "fused", "visual", "acoustic", "context");
  for (const auto& c : ranked) {
    std::printf("%-5d %-20s %8.4f", c.rank, c.entry_id.c_str(), c.fused);
    for (const auto& s : c.per_modality) {
      if (s.available) {
        std::printf(" %8.4f", s.similarity);
      } else {
        std::printf(" %8s", "-");
      }
    }
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reunite: cross-modal re-identification of lost individuals"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Key-value config file (decay.*, fusion.*, context.*, match.*, <species>.*)");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Add an observation to the store");
  std::string ingest_store, kind = "intake", species = "dog", feature_path, wav_path, entry_id, obs_id, name;
  ContextFlags ingest_ctx;
  ingest_cmd->add_option("--store", ingest_store, "Store directory (default: $REUNITE_STORE)");
  ingest_cmd->add_option("--kind", kind, "report or intake")->check(CLI::IsMember({"report", "intake"}));
  ingest_cmd->add_option("--id", entry_id, "Entry id")->required();
  ingest_cmd->add_option("--obs-id", obs_id, "Observation id (default <id>-<n>)");
  ingest_cmd->add_option("--species", species, "dog, puppy, elephant, infant or a profile name");
  ingest_cmd->add_option("--name", name, "Display name");
  ingest_cmd->add_option("--features", feature_path, "Visual feature vector file");
  ingest_cmd->add_option("--wav", wav_path, "PCM16 mono WAV vocalisation");
  std::size_t visual_dim = kDefaultVisualDim;
  ingest_cmd->add_option("--visual-dim", visual_dim, "Feature dimensionality when creating a new store");
  ingest_ctx.add(ingest_cmd);

  // match
  auto* match_cmd = app.add_subcommand("match", "Rank gallery candidates for a stored entry or an ad-hoc query");
  std::string match_store, match_id, match_species = "dog", match_kind = "report", match_features, match_wav;
  int k = 0;
  bool match_json = false;
  ContextFlags match_ctx;
  match_cmd->add_option("--store", match_store, "Store directory (default: $REUNITE_STORE)");
  match_cmd->add_option("--id", match_id, "Stored entry to use as the query");
  match_cmd->add_option("--species", match_species, "Species of an ad-hoc query");
  match_cmd->add_option("--kind", match_kind, "Role of an ad-hoc query: report or intake")
      ->check(CLI::IsMember({"report", "intake"}));
  match_cmd->add_option("--features", match_features, "Visual feature file of an ad-hoc query");
  match_cmd->add_option("--wav", match_wav, "WAV of an ad-hoc query");
  match_cmd->add_option("-k", k, "Number of candidates (default match.k_default)");
  match_cmd->add_flag("--json", match_json, "Print the API response JSON");
  match_ctx.add(match_cmd);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic benchmark dataset");
  std::uint64_t seed = 42;
  int n_ids = 60, clusters = 4;
  double snr_db = 30.0;
  std::string synth_out;
  synth_cmd->add_option("--seed", seed, "Generator seed");
  synth_cmd->add_option("--n", n_ids, "Number of identities");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--snr-db", snr_db, "Vocalisation SNR in dB (inf disables noise)");
  synth_cmd->add_option("--clusters", clusters, "Number of visual look-alike clusters");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Run the visual-only vs multi-modal ablation");
  std::string eval_data, report_out, conditions = "visual_only,visual_context,full", seeds;
  eval_cmd->add_option("--data", eval_data, "Dataset directory written by synth");
  eval_cmd->add_option("--report-out", report_out, "Report JSON path (a .txt summary is written alongside)");
  eval_cmd->add_option("--conditions", conditions, "Comma-separated: visual_only, visual_context, full");
  eval_cmd->add_option("--seeds", seeds, "Seed list for a regenerated multi-seed sweep, e.g. 1-20");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve the review HTTP API");
  std::string serve_store, host = "127.0.0.1";
  int port = 8080;
  serve_cmd->add_option("--store", serve_store, "Store directory (default: $REUNITE_STORE)");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port");

  // confirm
  auto* confirm_cmd = app.add_subcommand("confirm", "Record a review outcome");
  std::string confirm_store, intake_id, confirm_entry, outcome = "confirmed";
  confirm_cmd->add_option("--store", confirm_store, "Store directory (default: $REUNITE_STORE)");
  confirm_cmd->add_option("--intake", intake_id, "Intake id (for a confirmed match)");
  confirm_cmd->add_option("--entry", confirm_entry, "Matched entry id, or the entry to close")->required();
  confirm_cmd->add_option("--outcome", outcome, "confirmed or not_found")
      ->check(CLI::IsMember({"confirmed", "not_found"}));

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = load_config(config_path);

    if (*ingest_cmd) {
      auto store = GalleryStore::create(store_path(ingest_store), visual_dim);
      IngestRequest req;
      req.role = kind == "report" ? Role::LostReport : Role::Intake;
      req.entry_id = entry_id;
      req.obs_id = obs_id;
      req.species = Species::parse(species);
      req.display_name = name;
      req.feature_path = feature_path;
      req.wav_path = wav_path;
      req.context = ingest_ctx.get();
      const auto res = ingest(store, req, cfg.profiles, cfg.visual);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << res.entry_id << "\n";
    } else if (*match_cmd) {
      auto store = GalleryStore::open(store_path(match_store));
      const auto view = store.snapshot();
      MatchQuery q;
      if (!match_id.empty()) {
        const auto* e = view.find(match_id);
        if (!e) throw Error(ErrorCode::UnknownEntry, match_id);
        q = query_from_entry(*e);
      } else {
        Observation obs;
        obs.obs_id = "adhoc";
        obs.role = match_kind == "report" ? Role::LostReport : Role::Intake;
        obs.species = Species::parse(match_species);
        if (!match_features.empty()) obs.visual = read_feature_file(match_features);
        if (!match_wav.empty()) obs.audio = wav::read_file(match_wav);
        obs.context = match_ctx.get();
        validate_observation(obs, view.visual_dim());
        q = make_query(obs, cfg.profiles);
      }
      const auto ranked = match(q, view, k > 0 ? k : cfg.k_default, cfg);
      if (match_json) {
        api::ApiMatchResponse resp;
        resp.intake_id = q.query_id;
        resp.generated_at = now_utc();
        for (const auto& c : ranked) {
          api::ApiCandidate ac{c.entry_id, c.rank, c.fused, {}, std::nullopt};
          for (const auto& s : c.per_modality) {
            ac.per_modality.push_back({s.modality, s.available, s.similarity, c.weight(s.modality)});
          }
          resp.candidates.push_back(std::move(ac));
        }
        std::cout << api::to_json(resp).dump(2) << "\n";
      } else {
        print_candidates(ranked);
      }
    } else if (*synth_cmd) {
      synth::SynthConfig sc;
      sc.seed = seed;
      if (n_ids != sc.n_identities) sc.set_identity_count(n_ids);
      sc.n_clusters = clusters;
      sc.snr_db = snr_db;
      const auto ds = synth::generate(sc);
      synth::write_dataset(ds, sc, synth_out);
      std::cout << "wrote " << ds.gallery.size() << " gallery entries and " << ds.queries.size() << " queries to "
                << synth_out << "\n";
    } else if (*eval_cmd) {
      if (!seeds.empty()) {
        const auto sweep = eval::seed_sweep(parse_seeds(seeds), synth::SynthConfig{}, cfg);
        const auto j = eval::to_json(sweep);
        if (!report_out.empty()) {
          std::ofstream(report_out, std::ios::binary | std::ios::trunc) << j.dump(2) << "\n";
        }
        for (std::size_t i = 0; i < sweep.seeds.size(); ++i) {
          std::printf("seed %-6llu ambiguous rank-1 gain %+.4f\n", (unsigned long long)sweep.seeds[i], sweep.gains[i]);
        }
        std::printf("improved %d / %zu seeds, mean gain %.4f, sign test p = %.3g\n", sweep.improved,
                    sweep.seeds.size(), sweep.mean_gain, sweep.p_value);
      } else {
        if (eval_data.empty()) throw Error(ErrorCode::InvalidConfig, "eval needs --data or --seeds");
        eval::AblationOptions opt;
        opt.conditions.clear();
        std::stringstream ss(conditions);
        std::string c;
        while (std::getline(ss, c, ',')) {
          if (!c.empty()) opt.conditions.push_back(eval::parse_condition(c));
        }
        const auto rep = eval::run_ablation(synth::read_dataset(eval_data), cfg, opt);
        const auto table = eval::summary_table(rep);
        if (!report_out.empty()) {
          std::ofstream(report_out, std::ios::binary | std::ios::trunc) << eval::to_json(rep).dump(2) << "\n";
          std::ofstream(report_out + ".txt", std::ios::binary | std::ios::trunc) << table;
        }
        std::cout << table;
      }
    } else if (*serve_cmd) {
      auto store = GalleryStore::open(store_path(serve_store));
      api::ReviewService svc(store, cfg);
      httplib::Server server;
      api::register_routes(server, svc);
      std::cerr << "serving " << store.dir() << " on http://" << host << ":" << port << "\n";
      if (!server.listen(host, port)) throw Error(ErrorCode::IoError, "cannot listen on " + host);
    } else if (*confirm_cmd) {
      auto store = GalleryStore::open(store_path(confirm_store));
      if (!intake_id.empty()) {
        if (outcome != "confirmed") throw Error(ErrorCode::InvalidConfig, "--intake implies a confirmed match");
        store.confirm_match(intake_id, confirm_entry);
      } else {
        store.mark_resolved(confirm_entry, parse_outcome(outcome));
      }
      const auto s = store.stats();
      std::printf("resolved %d (confirmed %d, not_found %d), success rate %.4f\n", s.total(), s.confirmed,
                  s.not_found, s.success_rate());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
