// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "boxseg/dataio/fsutil.hpp"
#include "boxseg/error.hpp"

namespace boxseg {

/// Flat TOML-style settings: `key = value` per line, `#` comments, optional
/// double quotes around values. `[section]` headers are accepted and ignored
/// since every key is already unique. Duplicate keys are an error.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text,
                                                                         const std::string& origin) {
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    std::string body = line;
    bool quoted = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '"') quoted = !quoted;
      if (body[i] == '#' && !quoted) {
        body.resize(i);
        break;
      }
    }
    body = trim(body);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ValidationError(where + ": unterminated section header");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    for (const auto& [k, v] : out) {
      if (k == key) throw ValidationError(where + ": duplicate key '" + key + "'");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> load_key_values(const std::string& path) {
  return parse_key_values(read_file(path), path);
}

}  // namespace boxseg
