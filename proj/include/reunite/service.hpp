// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

// HTTP review API over a gallery store.
//
//   GET  /intakes                pending (unresolved) intake records
//   GET  /match/{intake_id}?k=N  ranked lost-report candidates for an intake
//   POST /confirm                {"intake_id", "entry_id"}: resolve both
//   POST /reject                 {"intake_id", "entry_id"}: hide entry for that intake
//   GET  /stats                  outcome counts and success rate
//   GET  /audio/{obs_id}         stored WAV bytes

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

// Eigen (via fusion.hpp) must precede httplib: <resolv.h> defines a `_res`
// macro that breaks Eigen's product kernels.
#include "reunite/error.hpp"
#include "reunite/fusion.hpp"
#include "reunite/serialize.hpp"
#include "reunite/store.hpp"

#include <httplib.h>
#include <json.hpp>

namespace reunite::api {

using io::json;

struct ModalityBreakdown {
  Modality modality = Modality::Visual;
  bool available = false;
  double similarity = 0.0;
  double weight = 0.0;
};

struct ApiCandidate {
  std::string entry_id;
  int rank = 0;
  double fused = 0.0;
  std::vector<ModalityBreakdown> per_modality;
  std::optional<std::string> audio_url;
};

struct ApiMatchResponse {
  std::string intake_id;
  std::vector<ApiCandidate> candidates;
  Timestamp generated_at = 0;
};

inline json to_json(const ApiMatchResponse& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) {
    json mods = json::array();
    for (const auto& m : c.per_modality) {
      mods.push_back({{"modality", to_string(m.modality)},
                      {"available", m.available},
                      {"similarity", m.similarity},
                      {"weight", m.weight}});
    }
    json jc = {{"entry_id", c.entry_id}, {"rank", c.rank}, {"fused", c.fused}, {"per_modality", mods}};
    if (c.audio_url) jc["audio_url"] = *c.audio_url;
    cands.push_back(std::move(jc));
  }
  return {{"intake_id", r.intake_id}, {"candidates", cands}, {"generated_at", format_iso8601(r.generated_at)}};
}

inline ApiMatchResponse match_response_from_json(const json& j) {
  ApiMatchResponse r;
  r.intake_id = j.at("intake_id").get<std::string>();
  r.generated_at = parse_iso8601(j.at("generated_at").get<std::string>());
  for (const auto& jc : j.at("candidates")) {
    ApiCandidate c;
    c.entry_id = jc.at("entry_id").get<std::string>();
    c.rank = jc.at("rank").get<int>();
    c.fused = jc.at("fused").get<double>();
    for (const auto& jm : jc.at("per_modality")) {
      c.per_modality.push_back({parse_modality(jm.at("modality").get<std::string>()), jm.at("available").get<bool>(),
                                jm.at("similarity").get<double>(), jm.at("weight").get<double>()});
    }
    if (jc.contains("audio_url")) c.audio_url = jc.at("audio_url").get<std::string>();
    r.candidates.push_back(std::move(c));
  }
  return r;
}

/// HTTP-style failure: status plus message.
struct ApiError {
  int status = 500;
  std::string message;
};

inline int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownEntry: return 404;
    case ErrorCode::AlreadyResolved: return 409;
    case ErrorCode::ParseError:
    case ErrorCode::InvalidObservation: return 400;
    default: return 500;
  }
}

/// Request handling independent of the transport, so it can be exercised
/// directly as well as through the server.
class ReviewService {
 public:
  using Clock = std::function<Timestamp()>;

  ReviewService(GalleryStore& store, MatchConfig cfg, Clock clock = now_utc)
      : store_(store), cfg_(std::move(cfg)), clock_(std::move(clock)) {}

  json intakes() const {
    json out = json::array();
    for (const auto& [id, e] : store_.snapshot()) {
      if (e->resolved || e->role() != Role::Intake) continue;
      json mods = json::array();
      for (auto m : kAllModalities) {
        bool has = false;
        for (const auto& o : e->observations) has = has || o.has(m);
        if (has) mods.push_back(to_string(m));
      }
      out.push_back({{"entry_id", id},
                     {"species", e->identity.species.str()},
                     {"display_name", e->identity.display_name},
                     {"modalities", mods}});
    }
    return {{"intakes", out}};
  }

  ApiMatchResponse match(const std::string& intake_id, int k) const {
    const auto view = store_.snapshot();
    const auto* intake = require_intake(view, intake_id);
    if (intake->resolved) throw Error(ErrorCode::AlreadyResolved, intake_id);
    ApiMatchResponse resp;
    resp.intake_id = intake_id;
    resp.generated_at = clock_();
    std::vector<MatchCandidate> ranked;
    try {
      ranked = reunite::match(query_from_entry(*intake), view, k, cfg_);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyGallery && e.code() != ErrorCode::NoUsableModality) throw;
    }
    for (const auto& c : ranked) {
      ApiCandidate ac;
      ac.entry_id = c.entry_id;
      ac.rank = c.rank;
      ac.fused = c.fused;
      for (const auto& s : c.per_modality) {
        ac.per_modality.push_back({s.modality, s.available, s.similarity, c.weight(s.modality)});
      }
      if (const auto* e = view.find(c.entry_id)) {
        for (const auto& o : e->observations) {
          if (o.audio) {
            ac.audio_url = "/audio/" + o.obs_id;
            break;
          }
        }
      }
      resp.candidates.push_back(std::move(ac));
    }
    return resp;
  }

  void confirm(const std::string& intake_id, const std::string& entry_id) {
    require_intake(store_.snapshot(), intake_id);
    store_.confirm_match(intake_id, entry_id, clock_());
  }

  void reject(const std::string& intake_id, const std::string& entry_id) {
    require_intake(store_.snapshot(), intake_id);
    store_.add_exclusion(entry_id, intake_id);
  }

  json stats() const {
    const auto s = store_.stats();
    return {{"confirmed", s.confirmed}, {"not_found", s.not_found}, {"total", s.total()},
            {"success_rate", s.success_rate()}};
  }

  /// WAV bytes of a stored observation.
  std::string audio(const std::string& obs_id) const {
    io::check_id(obs_id, "observation id");
    const auto path = store_.dir() / io::audio_relpath(obs_id);
    if (!std::filesystem::exists(path)) throw Error(ErrorCode::UnknownEntry, "no audio for '" + obs_id + "'");
    return wav::encode(wav::read_file(path.string()));
  }

  int k_default() const { return cfg_.k_default; }

 private:
  static const GalleryEntry* require_intake(const GalleryView& view, const std::string& id) {
    const auto* e = view.find(id);
    if (!e || e->role() != Role::Intake) throw Error(ErrorCode::UnknownEntry, "no intake '" + id + "'");
    return e;
  }

  GalleryStore& store_;
  MatchConfig cfg_;
  Clock clock_;
};

namespace detail {

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

/// Runs `fn`, mapping library errors and malformed input to HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, status_for(e.code()), e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed body: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

inline std::pair<std::string, std::string> decision_body(const httplib::Request& req) {
  const auto j = json::parse(req.body);
  if (!j.is_object() || !j.contains("intake_id") || !j.contains("entry_id") || !j["intake_id"].is_string() ||
      !j["entry_id"].is_string()) {
    throw Error(ErrorCode::ParseError, "body must be {\"intake_id\": string, \"entry_id\": string}");
  }
  return {j["intake_id"].get<std::string>(), j["entry_id"].get<std::string>()};
}

}  // namespace detail

inline void register_routes(httplib::Server& server, ReviewService& svc) {
  using httplib::Request;
  using httplib::Response;

  server.Get("/intakes", [&svc](const Request&, Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, 200, svc.intakes()); });
  });

  server.Get(R"(/match/([A-Za-z0-9._-]+))", [&svc](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      int k = svc.k_default();
      if (req.has_param("k")) {
        const auto s = req.get_param_value("k");
        std::size_t used = 0;
        try {
          k = std::stoi(s, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != s.size() || k < 1) throw Error(ErrorCode::ParseError, "k must be a positive integer");
      }
      detail::send_json(res, 200, to_json(svc.match(req.matches[1], k)));
    });
  });

  server.Post("/confirm", [&svc](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      const auto [intake, entry] = detail::decision_body(req);
      svc.confirm(intake, entry);
      detail::send_json(res, 200, {{"status", "confirmed"}, {"intake_id", intake}, {"entry_id", entry}});
    });
  });

  server.Post("/reject", [&svc](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      const auto [intake, entry] = detail::decision_body(req);
      svc.reject(intake, entry);
      detail::send_json(res, 200, {{"status", "rejected"}, {"intake_id", intake}, {"entry_id", entry}});
    });
  });

  server.Get("/stats", [&svc](const Request&, Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, 200, svc.stats()); });
  });

  server.Get(R"(/audio/([A-Za-z0-9._-]+))", [&svc](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      res.status = 200;
      res.set_content(svc.audio(req.matches[1]), "audio/wav");
    });
  });
}

}  // namespace reunite::api
