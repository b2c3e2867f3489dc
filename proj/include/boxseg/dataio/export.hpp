// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "boxseg/dataio/fsutil.hpp"
#include "boxseg/dataio/hash.hpp"
#include "boxseg/dataio/png.hpp"
#include "boxseg/error.hpp"

namespace boxseg {

using NamedRaster = std::pair<std::string, LabelRaster>;

inline constexpr const char* kManifestName = "manifest.json";

/// File name for an image id: characters outside [A-Za-z0-9._-] become '_'.
inline std::string raster_file_name(const std::string& image_id) {
  std::string out = image_id;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out + ".png";
}

/// One 8-bit PNG per raster plus manifest.json, entries sorted by image id.
/// Returns the manifest.
inline nlohmann::json export_pseudo_labels(std::vector<NamedRaster> rasters, const std::string& out_dir,
                                           const std::string& config_fingerprint) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
  std::sort(rasters.begin(), rasters.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  nlohmann::json entries = nlohmann::json::array();
  std::set<std::string> files;
  for (const auto& [id, raster] : rasters) {
    const std::string file = raster_file_name(id);
    if (!files.insert(file).second) throw ValidationError("image ids collide on file name " + file);
    const std::string path = (fs::path(out_dir) / file).string();
    write_png_labels(path, raster);
    entries.push_back({{"image_id", id},
                       {"file", file},
                       {"width", raster.width()},
                       {"height", raster.height()},
                       {"sha256", sha256_hex(read_file(path))}});
  }
  nlohmann::json manifest{{"format", "boxseg.pseudo_labels"},
                          {"version", 1},
                          {"config_fingerprint", config_fingerprint},
                          {"count", entries.size()},
                          {"images", std::move(entries)}};
  write_file_atomic((fs::path(out_dir) / kManifestName).string(), manifest.dump(2) + "\n");
  return manifest;
}

struct PseudoLabelSet {
  std::string config_fingerprint;
  std::vector<NamedRaster> rasters;  // manifest order
};

/// Reads a directory written by export_pseudo_labels, verifying sizes and
/// file digests.
inline PseudoLabelSet load_pseudo_labels(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string manifest_path = (fs::path(dir) / kManifestName).string();
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(manifest_path + ": malformed JSON: " + e.what());
  }
  PseudoLabelSet out;
  try {
    out.config_fingerprint = m.at("config_fingerprint").get<std::string>();
    for (const auto& e : m.at("images")) {
      const std::string id = e.at("image_id").get<std::string>();
      const std::string path = (fs::path(dir) / e.at("file").get<std::string>()).string();
      if (e.contains("sha256") && sha256_hex(read_file(path)) != e["sha256"].get<std::string>()) {
        throw ValidationError(manifest_path + ": digest mismatch for image '" + id + "'");
      }
      LabelRaster r = read_png_labels(path);
      if (r.width() != e.at("width").get<int>() || r.height() != e.at("height").get<int>()) {
        throw ValidationError(manifest_path + ": size mismatch for image '" + id + "'");
      }
      out.rasters.emplace_back(id, std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(manifest_path + ": " + e.what());
  }
  return out;
}

}  // namespace boxseg
