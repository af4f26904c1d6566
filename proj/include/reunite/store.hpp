// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

// Persistent gallery store.
//
// Directory layout:
//   store.json       store metadata (visual dimensionality)
//   gallery.ndjson   one checksummed GalleryEntry record per line
//   audio/<obs>.wav  PCM16 mono clips referenced by observations
//   outcomes.ndjson  append-only review outcome log
//
// Writers are serialised; readers take immutable snapshots that later writes
// never touch.

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reunite/error.hpp"
#include "reunite/serialize.hpp"
#include "reunite/types.hpp"
#include "reunite/wav.hpp"

namespace reunite {

inline constexpr std::size_t kDefaultVisualDim = 16;

enum class Outcome { Confirmed, NotFound };

inline std::string_view to_string(Outcome o) { return o == Outcome::Confirmed ? "confirmed" : "not_found"; }

inline Outcome parse_outcome(std::string_view s) {
  if (s == "confirmed") return Outcome::Confirmed;
  if (s == "not_found") return Outcome::NotFound;
  throw Error(ErrorCode::ParseError, "unknown outcome '" + std::string(s) + "'");
}

struct OutcomeRecord {
  std::string entry_id;
  Outcome outcome = Outcome::Confirmed;
  Timestamp at = 0;
  std::string matched_entry_id;  // set for confirmed review matches
};

struct OutcomeStats {
  int confirmed = 0;
  int not_found = 0;

  int total() const { return confirmed + not_found; }
  double success_rate() const { return total() == 0 ? 0.0 : double(confirmed) / double(total()); }
};

inline OutcomeStats outcome_stats(const std::vector<OutcomeRecord>& log) {
  OutcomeStats s;
  for (const auto& r : log) (r.outcome == Outcome::Confirmed ? s.confirmed : s.not_found)++;
  return s;
}

inline Timestamp now_utc() {
  using namespace std::chrono;
  return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

/// Point-in-time, read-only view of the gallery. Cheap to copy and safe to
/// share across threads.
class GalleryView {
 public:
  using Map = std::map<std::string, std::shared_ptr<const GalleryEntry>>;

  GalleryView() : entries_(std::make_shared<const Map>()) {}
  GalleryView(std::shared_ptr<const Map> entries, std::size_t visual_dim)
      : entries_(std::move(entries)), visual_dim_(visual_dim) {}

  /// Builds a free-standing view (no store), e.g. for in-memory benchmarks.
  static GalleryView from_entries(std::vector<GalleryEntry> entries, std::size_t visual_dim) {
    auto m = std::make_shared<Map>();
    for (auto& e : entries) {
      auto id = e.identity.id;
      (*m)[id] = std::make_shared<const GalleryEntry>(std::move(e));
    }
    return GalleryView(std::move(m), visual_dim);
  }

  std::size_t size() const { return entries_->size(); }
  std::size_t visual_dim() const { return visual_dim_; }

  const GalleryEntry* find(const std::string& id) const {
    auto it = entries_->find(id);
    return it == entries_->end() ? nullptr : it->second.get();
  }

  /// Entries in id order.
  auto begin() const { return entries_->begin(); }
  auto end() const { return entries_->end(); }

  std::size_t unresolved_count() const {
    std::size_t n = 0;
    for (const auto& [id, e] : *entries_) n += e->resolved ? 0 : 1;
    return n;
  }

 private:
  std::shared_ptr<const Map> entries_;
  std::size_t visual_dim_ = kDefaultVisualDim;
};

class GalleryStore {
 public:
  /// Creates an empty store directory (or reopens an existing one with the
  /// same dimensionality).
  static GalleryStore create(const std::filesystem::path& dir, std::size_t visual_dim = kDefaultVisualDim) {
    namespace fs = std::filesystem;
    if (visual_dim == 0) throw Error(ErrorCode::InvalidConfig, "visual dimensionality must be positive");
    if (fs::exists(dir / "store.json")) {
      auto s = open(dir);
      if (s.visual_dim() != visual_dim) {
        throw Error(ErrorCode::InvalidConfig, "store exists with visual_dim " + std::to_string(s.visual_dim()));
      }
      return s;
    }
    fs::create_directories(dir / "audio");
    write_atomic(dir / "store.json", io::json{{"visual_dim", visual_dim}, {"format", 1}}.dump() + "\n");
    write_atomic(dir / "gallery.ndjson", "");
    if (!fs::exists(dir / "outcomes.ndjson")) write_atomic(dir / "outcomes.ndjson", "");
    return GalleryStore(dir, visual_dim);
  }

  /// Loads and checksum-verifies an existing store.
  static GalleryStore open(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::ifstream meta(dir / "store.json");
    if (!meta) throw Error(ErrorCode::IoError, "no store at " + dir.string());
    std::size_t dim = 0;
    try {
      dim = io::json::parse(meta).at("visual_dim").get<std::size_t>();
    } catch (const io::json::exception& ex) {
      throw Error(ErrorCode::StoreCorrupt, std::string("bad store.json: ") + ex.what());
    }
    GalleryStore store(dir, dim);
    auto map = std::make_shared<GalleryView::Map>();
    std::ifstream in(dir / "gallery.ndjson");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = io::verify_line(line);
      GalleryEntry e;
      try {
        e = io::entry_from_json(j, dir);
      } catch (const io::json::exception& ex) {
        throw Error(ErrorCode::StoreCorrupt, std::string("malformed record: ") + ex.what());
      }
      auto id = e.identity.id;
      (*map)[id] = std::make_shared<const GalleryEntry>(std::move(e));
    }
    store.current_ = std::move(map);
    store.outcomes_ = read_outcomes(dir / "outcomes.ndjson");
    return store;
  }

  GalleryStore(GalleryStore&& other) noexcept
      : dir_(std::move(other.dir_)), visual_dim_(other.visual_dim_),
        current_(std::move(other.current_)), outcomes_(std::move(other.outcomes_)) {}

  const std::filesystem::path& dir() const { return dir_; }
  std::size_t visual_dim() const { return visual_dim_; }

  void validate(const GalleryEntry& e) const {
    io::check_id(e.identity.id, "identity id");
    if (e.observations.empty()) {
      throw Error(ErrorCode::InvalidObservation, "entry '" + e.identity.id + "' has no observation");
    }
    for (const auto& o : e.observations) {
      io::check_id(o.obs_id, "observation id");
      validate_observation(o, visual_dim_);
      if (!(o.species == e.identity.species)) {
        throw Error(ErrorCode::InvalidObservation, "observation '" + o.obs_id + "' species differs from identity");
      }
    }
    if (e.appearance && e.appearance->mean.size() != visual_dim_) {
      throw Error(ErrorCode::DimensionMismatch, "cached appearance has wrong dimensionality");
    }
  }

  /// Inserts or replaces (last writer wins) the entry keyed by identity id.
  std::string put(GalleryEntry entry) {
    std::vector<GalleryEntry> batch;
    batch.push_back(std::move(entry));
    return put_many(std::move(batch)).front();
  }

  /// Atomic batch put: all entries become visible together or none do.
  std::vector<std::string> put_many(std::vector<GalleryEntry> entries) {
    for (const auto& e : entries) validate(e);
    std::lock_guard writer(write_mu_);
    auto next = std::make_shared<GalleryView::Map>(*current());
    std::vector<std::string> ids;
    for (auto& e : entries) {
      for (const auto& o : e.observations) {
        if (o.audio) write_audio(o);
      }
      ids.push_back(e.identity.id);
      auto id = e.identity.id;
      (*next)[id] = std::make_shared<const GalleryEntry>(std::move(e));
    }
    commit(std::move(next));
    return ids;
  }

  GalleryView snapshot() const { return GalleryView(current(), visual_dim_); }

  /// Marks an entry resolved and appends the outcome to the log.
  void mark_resolved(const std::string& entry_id, Outcome outcome, Timestamp at = now_utc()) {
    std::lock_guard writer(write_mu_);
    commit(with_resolved(entry_id));
    append_outcome({entry_id, outcome, at, {}});
  }

  /// Reviewer-confirmed match: both records resolved, one confirmed outcome.
  void confirm_match(const std::string& intake_id, const std::string& entry_id, Timestamp at = now_utc()) {
    std::lock_guard writer(write_mu_);
    auto cur = current();
    for (const auto& id : {intake_id, entry_id}) {
      auto it = cur->find(id);
      if (it == cur->end()) throw Error(ErrorCode::UnknownEntry, id);
      if (it->second->resolved) throw Error(ErrorCode::AlreadyResolved, id);
    }
    auto next = std::make_shared<GalleryView::Map>(*cur);
    for (const auto& id : {intake_id, entry_id}) {
      auto copy = *(*next)[id];
      copy.resolved = true;
      (*next)[id] = std::make_shared<const GalleryEntry>(std::move(copy));
    }
    commit(std::move(next));
    append_outcome({intake_id, Outcome::Confirmed, at, entry_id});
  }

  /// Hides `entry_id` from future searches issued with `query_id`.
  void add_exclusion(const std::string& entry_id, const std::string& query_id) {
    std::lock_guard writer(write_mu_);
    auto cur = current();
    auto it = cur->find(entry_id);
    if (it == cur->end()) throw Error(ErrorCode::UnknownEntry, entry_id);
    auto next = std::make_shared<GalleryView::Map>(*cur);
    auto copy = *it->second;
    copy.exclusions.insert(query_id);
    (*next)[entry_id] = std::make_shared<const GalleryEntry>(std::move(copy));
    commit(std::move(next));
  }

  std::vector<OutcomeRecord> outcomes() const {
    std::lock_guard lock(read_mu_);
    return outcomes_;
  }

  OutcomeStats stats() const { return outcome_stats(outcomes()); }

  static io::json to_json(const OutcomeRecord& r) {
    io::json j = {{"entry_id", r.entry_id}, {"outcome", to_string(r.outcome)}, {"at", format_iso8601(r.at)}};
    if (!r.matched_entry_id.empty()) j["matched_entry_id"] = r.matched_entry_id;
    return j;
  }

 private:
  GalleryStore(std::filesystem::path dir, std::size_t visual_dim)
      : dir_(std::move(dir)), visual_dim_(visual_dim), current_(std::make_shared<const GalleryView::Map>()) {}

  std::shared_ptr<const GalleryView::Map> current() const {
    std::lock_guard lock(read_mu_);
    return current_;
  }

  std::shared_ptr<GalleryView::Map> with_resolved(const std::string& entry_id) const {
    auto cur = current();
    auto it = cur->find(entry_id);
    if (it == cur->end()) throw Error(ErrorCode::UnknownEntry, entry_id);
    auto next = std::make_shared<GalleryView::Map>(*cur);
    auto copy = *it->second;
    copy.resolved = true;
    (*next)[entry_id] = std::make_shared<const GalleryEntry>(std::move(copy));
    return next;
  }

  static void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
      out << content;
      if (!out.flush()) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

  void write_audio(const Observation& o) const {
    auto path = dir_ / io::audio_relpath(o.obs_id);
    auto tmp = path;
    tmp += ".tmp";
    wav::write_file(tmp.string(), *o.audio);
    std::filesystem::rename(tmp, path);
  }

  // Persists `next` and only then publishes it to readers.
  void commit(std::shared_ptr<GalleryView::Map> next) {
    std::string content;
    for (const auto& [id, e] : *next) content += io::checksummed_line(io::to_json(*e)) + "\n";
    write_atomic(dir_ / "gallery.ndjson", content);
    std::lock_guard lock(read_mu_);
    current_ = std::move(next);
  }

  void append_outcome(const OutcomeRecord& r) {
    std::ofstream out(dir_ / "outcomes.ndjson", std::ios::app);
    if (!out) throw Error(ErrorCode::IoError, "cannot append outcome log");
    out << io::checksummed_line(to_json(r)) << "\n";
    if (!out.flush()) throw Error(ErrorCode::IoError, "short write to outcome log");
    std::lock_guard lock(read_mu_);
    outcomes_.push_back(r);
  }

  static std::vector<OutcomeRecord> read_outcomes(const std::filesystem::path& path) {
    std::vector<OutcomeRecord> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = io::verify_line(line);
      OutcomeRecord r;
      r.entry_id = j.at("entry_id").get<std::string>();
      r.outcome = parse_outcome(j.at("outcome").get<std::string>());
      r.at = parse_iso8601(j.at("at").get<std::string>());
      if (j.contains("matched_entry_id")) r.matched_entry_id = j["matched_entry_id"].get<std::string>();
      out.push_back(std::move(r));
    }
    return out;
  }

  std::filesystem::path dir_;
  std::size_t visual_dim_;
  std::shared_ptr<const GalleryView::Map> current_;
  std::vector<OutcomeRecord> outcomes_;
  mutable std::mutex read_mu_;
  std::mutex write_mu_;
};

}  // namespace reunite
