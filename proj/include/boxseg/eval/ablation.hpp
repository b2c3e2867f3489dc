// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Supervision-substitution study: the same pipeline run with predicted or
// ground-truth image labels and boxes, scored by pseudo-label mIoU.

#pragma once

#include <algorithm>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "boxseg/dataio/dataset.hpp"
#include "boxseg/eval/eval.hpp"
#include "boxseg/pipeline/pipeline.hpp"

namespace boxseg {

/// mIoU of generated pseudo-labels against the dataset's ground truth.
inline EvalReport evaluate_generation(const Dataset& dataset, std::span<const GenerationResult> results,
                                      const std::string& fingerprint = {}) {
  ConfusionAccumulator acc(dataset.classes().size());
  for (const auto& r : results) acc.add(r.raster, dataset.ground_truth(r.image_id).raster);
  EvalReport report = acc.report();
  report.config_fingerprint = fingerprint;
  return report;
}

struct AblationRow {
  Source labels_source = Source::predicted;
  Source boxes_source = Source::predicted;
  double pseudo_miou = 0.0;
  std::string config_fingerprint;
};

/// The three supervision levels: predicted labels and boxes, ground-truth
/// labels with predicted boxes, ground-truth labels and boxes.
inline std::vector<PipelineConfig> supervision_ladder(const PipelineConfig& base) {
  std::vector<PipelineConfig> out(3, base);
  out[0].labels_source = Source::predicted;
  out[0].boxes_source = Source::predicted;
  out[1].labels_source = Source::ground_truth;
  out[1].boxes_source = Source::predicted;
  out[2].labels_source = Source::ground_truth;
  out[2].boxes_source = Source::ground_truth;
  return out;
}

namespace detail {
inline int ladder_rank(const PipelineConfig& c) {
  const bool gl = c.labels_source == Source::ground_truth;
  const bool gb = c.boxes_source == Source::ground_truth;
  if (!gl && !gb) return 0;
  if (gl && !gb) return 1;
  if (gl && gb) return 2;
  return 3;  // predicted labels with ground-truth boxes goes last
}
}  // namespace detail

/// One generate + mIoU run per config over the whole dataset, rows ordered
/// by supervision level.
inline std::vector<AblationRow> ablation_report(const Dataset& dataset, const Backends& backends,
                                                std::span<const PipelineConfig> cfgs, int jobs = 1) {
  std::vector<PipelineConfig> ordered(cfgs.begin(), cfgs.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const PipelineConfig& a, const PipelineConfig& b) {
    return detail::ladder_rank(a) < detail::ladder_rank(b);
  });
  const std::vector<std::string> ids = dataset.ids();
  std::vector<AblationRow> rows;
  for (const auto& cfg : ordered) {
    const auto results = generate_all(dataset, backends, ids, cfg, jobs);
    const EvalReport report = evaluate_generation(dataset, results, cfg.fingerprint());
    rows.push_back({cfg.labels_source, cfg.boxes_source, report.miou, cfg.fingerprint()});
  }
  return rows;
}

inline std::string ablation_table(std::span<const AblationRow> rows) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-14s %-14s %12s\n", "image labels", "box labels", "pseudo mIoU");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-14s %-14s %12.4f\n", std::string(to_string(r.labels_source)).c_str(),
                  std::string(to_string(r.boxes_source)).c_str(), r.pseudo_miou);
    out += line;
  }
  return out;
}

inline nlohmann::json ablation_json(std::span<const AblationRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"labels_source", std::string(to_string(r.labels_source))},
                   {"boxes_source", std::string(to_string(r.boxes_source))},
                   {"pseudo_miou", round_g9(r.pseudo_miou)},
                   {"config_fingerprint", r.config_fingerprint}});
  }
  return {{"rows", std::move(arr)}};
}

}  // namespace boxseg
