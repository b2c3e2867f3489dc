// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Contracts for the three model roles that feed the pseudo-label pipeline.
// The engine never runs inference itself; implementations either replay
// interchange files or synthesize outputs from ground truth.

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "boxseg/maskgeom.hpp"

namespace boxseg {

struct ClassPrediction {
  int class_id = 0;
  double score = 0.0;

  friend bool operator==(const ClassPrediction&, const ClassPrediction&) = default;
};

struct Detection {
  Box box;                  // carries class_id and score
  std::string label_text;   // the text prompt that produced it
  double text_score = 1.0;  // phrase-match score of the prompt tokens
  int id = 0;               // identifies the prompt for segment_in_box

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct MaskCandidate {
  RleMask mask;
  double proposal_score = 0.0;
  int box_id = 0;

  friend bool operator==(const MaskCandidate&, const MaskCandidate&) = default;
};

/// Multi-label image classifier. Implementations must be safe to call
/// concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;
  /// Scores for every foreground class. `class_names` is indexed by class id
  /// (entry 0 is background and is not scored).
  [[nodiscard]] virtual std::vector<ClassPrediction> classify(
      std::string_view image_id, std::span<const std::string> class_names) const = 0;
};

/// Text-prompted box detector.
class Detector {
 public:
  virtual ~Detector() = default;
  /// Detections for the requested labels with box score >= box_threshold and
  /// text score >= text_threshold.
  [[nodiscard]] virtual std::vector<Detection> detect(std::string_view image_id,
                                                      std::span<const int> labels,
                                                      double box_threshold,
                                                      double text_threshold) const = 0;
};

/// Box-prompted mask proposer.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  [[nodiscard]] virtual std::vector<MaskCandidate> segment_in_box(std::string_view image_id,
                                                                  const Detection& det) const = 0;
};

/// Non-owning bundle of the three roles.
struct Backends {
  const Classifier& classifier;
  const Detector& detector;
  const Segmenter& segmenter;
};

}  // namespace boxseg
