// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "boxseg/dataio/hash.hpp"
#include "boxseg/error.hpp"
#include "boxseg/format.hpp"

namespace boxseg {

/// Where the pipeline takes image labels or boxes from.
enum class Source { predicted, ground_truth };

inline std::string_view to_string(Source s) {
  return s == Source::predicted ? "predicted" : "ground_truth";
}

inline Source parse_source(std::string_view s) {
  if (s == "predicted" || s == "pred") return Source::predicted;
  if (s == "ground_truth" || s == "gt") return Source::ground_truth;
  throw ValidationError("source must be 'predicted' or 'ground_truth', got '" + std::string(s) + "'");
}

struct PipelineConfig {
  int top_n = 3;
  double cls_score_min = 0.5;
  double box_threshold = 0.35;
  double text_threshold = 0.25;
  double nms_iou = 0.3;
  double containment_min = 0.85;
  double whole_coverage_min = 0.5;
  double union_gain_min = 0.01;  // fraction of the box area
  Source labels_source = Source::predicted;
  Source boxes_source = Source::predicted;
  int ignore_boundary_band = 0;

  /// Keys accepted by set(), in canonical (sorted) order.
  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k{
        "box_threshold",   "boxes_source", "cls_score_min",  "containment_min",
        "ignore_boundary_band", "labels_source", "nms_iou", "text_threshold",
        "top_n",           "union_gain_min", "whole_coverage_min"};
    return k;
  }

  void validate() const {
    if (top_n < 1) throw ValidationError("top_n must be >= 1");
    if (ignore_boundary_band < 0) throw ValidationError("ignore_boundary_band must be >= 0");
    const std::pair<const char*, double> unit[] = {
        {"cls_score_min", cls_score_min},     {"box_threshold", box_threshold},
        {"text_threshold", text_threshold},   {"nms_iou", nms_iou},
        {"containment_min", containment_min}, {"whole_coverage_min", whole_coverage_min},
        {"union_gain_min", union_gain_min}};
    for (const auto& [name, v] : unit) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string(name) + " must be in [0,1]");
    }
  }

  /// Sets one field from its textual form; unknown keys and unparsable
  /// values are rejected.
  void set(std::string_view key, std::string_view value) {
    if (key == "top_n") top_n = parse_int(key, value);
    else if (key == "cls_score_min") cls_score_min = parse_real(key, value);
    else if (key == "box_threshold") box_threshold = parse_real(key, value);
    else if (key == "text_threshold") text_threshold = parse_real(key, value);
    else if (key == "nms_iou") nms_iou = parse_real(key, value);
    else if (key == "containment_min") containment_min = parse_real(key, value);
    else if (key == "whole_coverage_min") whole_coverage_min = parse_real(key, value);
    else if (key == "union_gain_min") union_gain_min = parse_real(key, value);
    else if (key == "labels_source") labels_source = parse_source(value);
    else if (key == "boxes_source") boxes_source = parse_source(value);
    else if (key == "ignore_boundary_band") ignore_boundary_band = parse_int(key, value);
    else throw ValidationError("unknown pipeline setting '" + std::string(key) + "'");
  }

  [[nodiscard]] std::map<std::string, std::string> to_map() const {
    return {{"box_threshold", format_g9(box_threshold)},
            {"boxes_source", std::string(to_string(boxes_source))},
            {"cls_score_min", format_g9(cls_score_min)},
            {"containment_min", format_g9(containment_min)},
            {"ignore_boundary_band", std::to_string(ignore_boundary_band)},
            {"labels_source", std::string(to_string(labels_source))},
            {"nms_iou", format_g9(nms_iou)},
            {"text_threshold", format_g9(text_threshold)},
            {"top_n", std::to_string(top_n)},
            {"union_gain_min", format_g9(union_gain_min)},
            {"whole_coverage_min", format_g9(whole_coverage_min)}};
  }

  /// "key=value" lines in key order. Equal configs give equal strings.
  [[nodiscard]] std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : to_map()) out += k + "=" + v + "\n";
    return out;
  }

  /// Short stable identifier of canonical().
  [[nodiscard]] std::string fingerprint() const { return "cfg-" + sha256_hex(canonical()).substr(0, 16); }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;

 private:
  static int parse_int(std::string_view key, std::string_view v) {
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
      throw ValidationError(std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
    }
    return out;
  }
  static double parse_real(std::string_view key, std::string_view v) {
    // from_chars for double is not available in every libstdc++ we target
    std::string s(v);
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || !std::isfinite(out)) {
      throw ValidationError(std::string(key) + ": expected a number, got '" + s + "'");
    }
    return out;
  }
};

}  // namespace boxseg
