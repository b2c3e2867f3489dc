// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "boxseg/error.hpp"

namespace boxseg {

struct ClassEntry {
  int id = 0;
  std::string name;
  std::vector<std::string> aliases;
};

/// Ordered class list with alias resolution. Id 0 is background, ids are
/// dense, and 255 (the ignore label) is never a class.
///
/// File format (JSON):
///   {"classes": [{"id": 0, "name": "background"},
///                {"id": 1, "name": "motorcycle", "aliases": ["motor bikes"]}, ...]}
class ClassTable {
 public:
  ClassTable() : ClassTable(std::vector<ClassEntry>{{0, "background", {}}}) {}

  explicit ClassTable(std::vector<ClassEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty() || entries_.front().id != 0) {
      throw ValidationError("class table must start with background at id 0");
    }
    if (entries_.size() > 255) {
      throw ValidationError("class table has " + std::to_string(entries_.size()) +
                            " entries; at most 255 fit below the ignore label");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const ClassEntry& e = entries_[i];
      if (e.id != static_cast<int>(i)) {
        throw ValidationError("class ids must be dense from 0; entry '" + e.name + "' has id " +
                              std::to_string(e.id) + ", expected " + std::to_string(i));
      }
      add_lookup(e.name, e.id);
      for (const auto& a : e.aliases) add_lookup(a, e.id);
    }
  }

  /// "background", "class1", ..., "classN".
  static ClassTable numbered(int foreground_classes) {
    std::vector<ClassEntry> entries{{0, "background", {}}};
    for (int i = 1; i <= foreground_classes; ++i) entries.push_back({i, "class" + std::to_string(i), {}});
    return ClassTable(std::move(entries));
  }

  static ClassTable from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("classes") || !j["classes"].is_array()) {
      throw ValidationError("class table JSON needs a 'classes' array");
    }
    std::vector<ClassEntry> entries;
    for (const auto& c : j["classes"]) {
      ClassEntry e;
      try {
        e.id = c.at("id").get<int>();
        e.name = c.at("name").get<std::string>();
        if (c.contains("aliases")) e.aliases = c["aliases"].get<std::vector<std::string>>();
      } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("malformed class entry: ") + ex.what());
      }
      entries.push_back(std::move(e));
    }
    return ClassTable(std::move(entries));
  }

  static ClassTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open class table " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError("class table " + path + " is not valid JSON: " + ex.what());
    }
    return from_json(j);
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries_) {
      nlohmann::json c{{"id", e.id}, {"name", e.name}};
      if (!e.aliases.empty()) c["aliases"] = e.aliases;
      arr.push_back(std::move(c));
    }
    return {{"classes", std::move(arr)}};
  }

  /// Number of classes including background.
  [[nodiscard]] int size() const noexcept { return static_cast<int>(entries_.size()); }
  [[nodiscard]] bool contains(int id) const noexcept { return id >= 0 && id < size(); }
  [[nodiscard]] const std::string& name(int id) const { return entries_.at(static_cast<std::size_t>(id)).name; }
  [[nodiscard]] const std::vector<ClassEntry>& entries() const noexcept { return entries_; }

  /// Canonical names indexed by class id.
  [[nodiscard]] std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
  }

  /// Resolves a canonical name or alias (case- and space-insensitive).
  [[nodiscard]] std::optional<int> resolve(std::string_view name) const {
    auto it = lookup_.find(normalize(name));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  static std::string normalize(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char ch : s) {
      const auto c = static_cast<unsigned char>(ch);
      if (std::isspace(c) || ch == '_') {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
  }

 private:
  void add_lookup(std::string_view name, int id) {
    const std::string key = normalize(name);
    if (key.empty()) throw ValidationError("empty class name or alias for id " + std::to_string(id));
    auto [it, inserted] = lookup_.emplace(key, id);
    if (!inserted && it->second != id) {
      throw ValidationError("class name '" + std::string(name) + "' is used by ids " +
                            std::to_string(it->second) + " and " + std::to_string(id));
    }
  }

  std::vector<ClassEntry> entries_;
  std::map<std::string, int> lookup_;
};

}  // namespace boxseg
