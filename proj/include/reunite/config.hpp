// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "reunite/error.hpp"

namespace reunite {

/// Key prefixes owned by engine settings; every other prefix names a
/// species profile.
inline bool is_engine_section(std::string_view name) {
  for (std::string_view s : {"context", "decay", "fusion", "match", "visual"}) {
    if (name == s) return true;
  }
  return false;
}

/// Flat `key = value` text file. Blank lines and lines starting with `#` are
/// ignored; keys are dotted (`decay.visual`, `dog.f_min_hz`).
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text) {
    KeyValueFile kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto body = trim(line.substr(0, line.find('#')));
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
      }
      auto key = trim(body.substr(0, eq));
      auto value = trim(body.substr(eq + 1));
      if (key.empty()) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": empty key");
      }
      kv.values_[key] = value;
    }
    return kv;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool contains(const std::string& key) const { return values_.count(key) != 0; }

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Overwrites `out` when the key is present.
  void get(const std::string& key, double& out) const {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    out = to_double(key, it->second);
  }

  void get(const std::string& key, int& out) const {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    const auto& s = it->second;
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(ErrorCode::ParseError, "key '" + key + "': not an integer: " + s);
    }
    out = v;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static double to_double(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "key '" + key + "': not a number: " + s);
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace reunite
