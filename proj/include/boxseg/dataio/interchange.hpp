// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Interchange record: the file boundary between model adapters and the
// engine. One JSON document per image, schema version 1. See
// docs/interchange.md for the field-by-field description.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "boxseg/backends/types.hpp"
#include "boxseg/dataio/class_table.hpp"
#include "boxseg/dataio/fsutil.hpp"
#include "boxseg/dataio/hash.hpp"
#include "boxseg/error.hpp"
#include "boxseg/maskgeom.hpp"

namespace boxseg {

inline constexpr int kInterchangeSchemaVersion = 1;
inline constexpr const char* kInterchangeSchemaName = "boxseg.interchange";

struct InterchangeCandidate {
  RleMask mask;
  double proposal_score = 0.0;

  friend bool operator==(const InterchangeCandidate&, const InterchangeCandidate&) = default;
};

struct InterchangeDetection {
  std::string label_text;
  Box box;  // class_id and score live on the box
  double text_score = 1.0;
  std::vector<InterchangeCandidate> candidates;

  friend bool operator==(const InterchangeDetection&, const InterchangeDetection&) = default;
};

struct Producer {
  std::string model;
  std::string version;
  std::string prompt;

  friend bool operator==(const Producer&, const Producer&) = default;
};

struct InterchangeRecord {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<ClassPrediction> classifier_scores;
  std::vector<InterchangeDetection> detections;
  Producer producer;
  std::string content_hash;  // "sha256:<hex>" over the canonical payload

  friend bool operator==(const InterchangeRecord&, const InterchangeRecord&) = default;
};

namespace detail {

inline nlohmann::json rle_to_json(const RleMask& r) {
  return {{"size", {r.height, r.width}}, {"counts", r.counts}};
}

inline RleMask rle_from_json(const nlohmann::json& j) {
  RleMask r;
  const auto& size = j.at("size");
  if (!size.is_array() || size.size() != 2) throw ValidationError("RLE size must be [height, width]");
  r.height = size[0].get<int>();
  r.width = size[1].get<int>();
  r.counts = j.at("counts").get<std::vector<std::uint32_t>>();
  return r;
}

inline bool unit_interval(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace detail

/// The payload object (everything except the hash), keys sorted.
inline nlohmann::json interchange_payload(const InterchangeRecord& rec) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& p : rec.classifier_scores) scores.push_back({{"class_id", p.class_id}, {"score", p.score}});
  nlohmann::json dets = nlohmann::json::array();
  for (const auto& d : rec.detections) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : d.candidates) {
      cands.push_back({{"rle", detail::rle_to_json(c.mask)}, {"proposal_score", c.proposal_score}});
    }
    dets.push_back({{"label_text", d.label_text},
                    {"class_id", d.box.class_id},
                    {"box", {d.box.x0, d.box.y0, d.box.x1, d.box.y1}},
                    {"score", d.box.score},
                    {"text_score", d.text_score},
                    {"candidates", std::move(cands)}});
  }
  return {{"schema", kInterchangeSchemaName},
          {"schema_version", kInterchangeSchemaVersion},
          {"image_id", rec.image_id},
          {"width", rec.width},
          {"height", rec.height},
          {"classifier_scores", std::move(scores)},
          {"detections", std::move(dets)},
          {"producer", {{"model", rec.producer.model}, {"version", rec.producer.version}, {"prompt", rec.producer.prompt}}}};
}

/// "sha256:<hex>" of the compact canonical dump of a payload object.
inline std::string content_hash_of(const nlohmann::json& payload) {
  return "sha256:" + sha256_hex(payload.dump());
}

/// Semantic checks. Messages name the offending detection/candidate. With a
/// class table, class ids must also exist in it.
inline void validate_interchange(const InterchangeRecord& rec, const ClassTable* classes = nullptr) {
  const std::string where = "interchange record '" + rec.image_id + "'";
  if (rec.image_id.empty()) throw ValidationError("interchange record has an empty image_id");
  if (rec.width < 1 || rec.height < 1) throw ValidationError(where + ": non-positive image size");
  auto check_class = [&](int id, const std::string& ctx) {
    if (id < 1 || id >= LabelRaster::kIgnore || (classes != nullptr && !classes->contains(id))) {
      throw ValidationError(where + ": " + ctx + " has invalid class_id " + std::to_string(id));
    }
  };
  for (std::size_t i = 0; i < rec.classifier_scores.size(); ++i) {
    const auto& p = rec.classifier_scores[i];
    const std::string ctx = "classifier score " + std::to_string(i);
    check_class(p.class_id, ctx);
    if (!detail::unit_interval(p.score)) throw ValidationError(where + ": " + ctx + " is outside [0,1]");
  }
  for (std::size_t i = 0; i < rec.detections.size(); ++i) {
    const auto& d = rec.detections[i];
    const std::string ctx = "detection " + std::to_string(i);
    check_class(d.box.class_id, ctx);
    if (!d.box.valid() || !d.box.inside(rec.width, rec.height)) {
      throw ValidationError(where + ": " + ctx + " has an invalid or out-of-image box");
    }
    if (!detail::unit_interval(d.text_score)) throw ValidationError(where + ": " + ctx + " text_score outside [0,1]");
    for (std::size_t k = 0; k < d.candidates.size(); ++k) {
      const auto& c = d.candidates[k];
      const std::string cctx = ctx + " candidate " + std::to_string(k);
      if (c.mask.width != rec.width || c.mask.height != rec.height) {
        throw ValidationError(where + ": " + cctx + " mask size differs from the image");
      }
      if (auto problem = c.mask.check(); !problem.empty()) {
        throw ValidationError(where + ": " + cctx + ": " + problem);
      }
      if (!detail::unit_interval(c.proposal_score)) {
        throw ValidationError(where + ": " + cctx + " proposal_score outside [0,1]");
      }
    }
  }
}

/// Parses and verifies a record: JSON syntax, then schema version, then the
/// content hash, then semantic validity. Each stage has its own error type.
inline InterchangeRecord parse_interchange(const std::string& text, const std::string& origin,
                                           const ClassTable* classes = nullptr) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedJsonError(origin + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw MalformedJsonError(origin + ": top level is not an object");
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
    throw SchemaVersionError(origin + ": missing integer schema_version");
  }
  if (const int v = j["schema_version"].get<int>(); v != kInterchangeSchemaVersion) {
    throw SchemaVersionError(origin + ": unsupported schema_version " + std::to_string(v) +
                             " (supported: " + std::to_string(kInterchangeSchemaVersion) + ")");
  }
  if (j.value("schema", std::string{}) != kInterchangeSchemaName) {
    throw SchemaVersionError(origin + ": schema is not '" + std::string(kInterchangeSchemaName) + "'");
  }
  if (!j.contains("content_hash") || !j["content_hash"].is_string()) {
    throw HashMismatchError(origin + ": missing content_hash");
  }
  const std::string stored = j["content_hash"].get<std::string>();
  nlohmann::json payload = j;
  payload.erase("content_hash");
  if (const std::string actual = content_hash_of(payload); actual != stored) {
    throw HashMismatchError(origin + ": content_hash mismatch (stored " + stored + ", computed " + actual + ")");
  }

  InterchangeRecord rec;
  try {
    rec.image_id = j.at("image_id").get<std::string>();
    rec.width = j.at("width").get<int>();
    rec.height = j.at("height").get<int>();
    for (const auto& s : j.at("classifier_scores")) {
      rec.classifier_scores.push_back({s.at("class_id").get<int>(), s.at("score").get<double>()});
    }
    const auto& dets = j.at("detections");
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const auto& d = dets[i];
      InterchangeDetection det;
      det.label_text = d.at("label_text").get<std::string>();
      const auto b = d.at("box").get<std::vector<int>>();
      if (b.size() != 4) throw ValidationError(origin + ": detection " + std::to_string(i) + " box needs 4 coordinates");
      det.box = Box{b[0], b[1], b[2], b[3], d.at("class_id").get<int>(), d.at("score").get<double>()};
      det.text_score = d.value("text_score", det.box.score);
      const auto& cands = d.at("candidates");
      for (std::size_t k = 0; k < cands.size(); ++k) {
        const auto& c = cands[k];
        try {
          det.candidates.push_back({detail::rle_from_json(c.at("rle")), c.at("proposal_score").get<double>()});
        } catch (const ValidationError& e) {
          throw ValidationError(origin + ": detection " + std::to_string(i) + " candidate " +
                                std::to_string(k) + ": " + e.what());
        }
      }
      rec.detections.push_back(std::move(det));
    }
    const auto& p = j.at("producer");
    rec.producer = {p.value("model", ""), p.value("version", ""), p.value("prompt", "")};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(origin + ": schema violation: " + e.what());
  }
  rec.content_hash = stored;
  validate_interchange(rec, classes);
  return rec;
}

/// Full document with the content hash filled in. Pretty-printed with sorted
/// keys, so equal records always serialize to equal bytes.
inline std::string serialize_interchange(const InterchangeRecord& rec) {
  validate_interchange(rec);
  nlohmann::json doc = interchange_payload(rec);
  doc["content_hash"] = content_hash_of(doc);
  return doc.dump(1) + "\n";
}

/// Record with content_hash recomputed from its payload.
inline InterchangeRecord with_content_hash(InterchangeRecord rec) {
  rec.content_hash = content_hash_of(interchange_payload(rec));
  return rec;
}

inline InterchangeRecord read_interchange(const std::string& path, const ClassTable* classes = nullptr) {
  return parse_interchange(read_file(path), path, classes);
}

inline void write_interchange(const InterchangeRecord& rec, const std::string& path) {
  write_file_atomic(path, serialize_interchange(rec));
}

}  // namespace boxseg
