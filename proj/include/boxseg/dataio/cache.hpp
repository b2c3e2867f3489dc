// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "boxseg/dataio/fsutil.hpp"
#include "boxseg/dataio/hash.hpp"

namespace boxseg {

/// On-disk result cache. Entries are keyed by (image content hash, prompt,
/// config fingerprint), so a changed config can never hit an old entry.
/// Writes go through temp-file + rename and are atomic per key.
class ResultCache {
 public:
  explicit ResultCache(std::string dir) : dir_(std::move(dir)) {}

  static std::string key(const std::string& image_hash, const std::string& prompt, const std::string& fingerprint) {
    // length-prefixed so field boundaries cannot shift
    const std::string material = std::to_string(image_hash.size()) + ":" + image_hash + "|" +
                                 std::to_string(prompt.size()) + ":" + prompt + "|" +
                                 std::to_string(fingerprint.size()) + ":" + fingerprint;
    return sha256_hex(material);
  }

  [[nodiscard]] std::optional<std::string> get(const std::string& key) const {
    const auto p = path_for(key);
    if (!std::filesystem::exists(p)) return std::nullopt;
    return read_file(p.string());
  }

  void put(const std::string& key, const std::string& bytes) const { write_file_atomic(path_for(key).string(), bytes); }

  [[nodiscard]] const std::string& dir() const noexcept { return dir_; }

 private:
  [[nodiscard]] std::filesystem::path path_for(const std::string& key) const {
    return std::filesystem::path(dir_) / key.substr(0, 2) / (key + ".bin");
  }

  std::string dir_;
};

}  // namespace boxseg
