// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "boxseg/backends/types.hpp"
#include "boxseg/dataio/interchange.hpp"

namespace boxseg {

/// Replays interchange records. Every returned value comes straight from a
/// record; nothing is synthesized.
class FileBackend final : public Classifier, public Detector, public Segmenter {
 public:
  explicit FileBackend(std::vector<InterchangeRecord> records) {
    for (auto& r : records) {
      const std::string id = r.image_id;
      if (!records_.emplace(id, std::move(r)).second) {
        throw ValidationError("duplicate interchange record for image '" + id + "'");
      }
    }
  }

  /// Loads every *.json file in `dir`.
  static FileBackend from_directory(const std::string& dir, const ClassTable* classes = nullptr) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("interchange directory " + dir + " does not exist");
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<InterchangeRecord> records;
    records.reserve(paths.size());
    for (const auto& p : paths) records.push_back(read_interchange(p, classes));
    return FileBackend(std::move(records));
  }

  [[nodiscard]] const InterchangeRecord& record(std::string_view image_id) const {
    auto it = records_.find(std::string(image_id));
    if (it == records_.end()) {
      throw ValidationError("no interchange record for image '" + std::string(image_id) + "'");
    }
    return it->second;
  }

  [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }

  [[nodiscard]] std::vector<ClassPrediction> classify(std::string_view image_id,
                                                      std::span<const std::string>) const override {
    return record(image_id).classifier_scores;
  }

  [[nodiscard]] std::vector<Detection> detect(std::string_view image_id, std::span<const int> labels,
                                              double box_threshold, double text_threshold) const override {
    const InterchangeRecord& rec = record(image_id);
    std::vector<Detection> out;
    for (std::size_t i = 0; i < rec.detections.size(); ++i) {
      const auto& d = rec.detections[i];
      if (std::find(labels.begin(), labels.end(), d.box.class_id) == labels.end()) continue;
      if (d.box.score < box_threshold || d.text_score < text_threshold) continue;
      out.push_back(Detection{d.box, d.label_text, d.text_score, static_cast<int>(i)});
    }
    return out;
  }

  /// Candidates stored for the prompting detection. The detection is found by
  /// id, or failing that by identical box and class (ground-truth prompts).
  [[nodiscard]] std::vector<MaskCandidate> segment_in_box(std::string_view image_id,
                                                          const Detection& det) const override {
    const InterchangeRecord& rec = record(image_id);
    auto same_prompt = [&](const InterchangeDetection& d) {
      return d.box.x0 == det.box.x0 && d.box.y0 == det.box.y0 && d.box.x1 == det.box.x1 &&
             d.box.y1 == det.box.y1 && d.box.class_id == det.box.class_id;
    };
    const InterchangeDetection* match = nullptr;
    if (det.id >= 0 && static_cast<std::size_t>(det.id) < rec.detections.size() &&
        same_prompt(rec.detections[static_cast<std::size_t>(det.id)])) {
      match = &rec.detections[static_cast<std::size_t>(det.id)];
    } else {
      auto it = std::find_if(rec.detections.begin(), rec.detections.end(), same_prompt);
      if (it != rec.detections.end()) match = &*it;
    }
    if (match == nullptr) {
      throw ValidationError("image '" + rec.image_id + "': no stored mask candidates for box (" +
                            std::to_string(det.box.x0) + "," + std::to_string(det.box.y0) + "," +
                            std::to_string(det.box.x1) + "," + std::to_string(det.box.y1) +
                            ") class " + std::to_string(det.box.class_id));
    }
    std::vector<MaskCandidate> out;
    out.reserve(match->candidates.size());
    for (const auto& c : match->candidates) out.push_back({c.mask, c.proposal_score, det.id});
    return out;
  }

 private:
  std::map<std::string, InterchangeRecord, std::less<>> records_;
};

}  // namespace boxseg
