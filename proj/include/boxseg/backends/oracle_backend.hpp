// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth oracle standing in for the classifier, detector and
// segmenter. Noise is seeded per (image, purpose, instance), so every call
// is a pure function of the dataset, the noise settings and its arguments.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "boxseg/backends/types.hpp"
#include "boxseg/dataio/dataset.hpp"
#include "boxseg/error.hpp"
#include "boxseg/random.hpp"

namespace boxseg {

struct OracleNoise {
  std::uint64_t seed = 0;
  double label_flip_prob = 0.0;
  double box_jitter_frac = 0.0;   // fraction of the box side
  int mask_morph_radius = 0;      // < 0 erodes, > 0 dilates
  bool morph_random_sign = false; // per object, use +|r| or -|r| with equal odds
  double part_split_prob = 0.0;

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(name) + " must be in [0,1]");
    };
    prob(label_flip_prob, "label_flip_prob");
    prob(part_split_prob, "part_split_prob");
    if (!(box_jitter_frac >= 0.0) || !std::isfinite(box_jitter_frac)) {
      throw ValidationError("box_jitter_frac must be >= 0");
    }
  }

  /// Named presets: "none", "preset-mild" (flip 0.1, jitter 0.1, morph +-1),
  /// "preset-parts" (every object split into two parts).
  static OracleNoise preset(std::string_view name, std::uint64_t seed) {
    OracleNoise n;
    n.seed = seed;
    if (name == "none" || name.empty()) return n;
    if (name == "preset-mild" || name == "mild") {
      n.label_flip_prob = 0.1;
      n.box_jitter_frac = 0.1;
      n.mask_morph_radius = 1;
      n.morph_random_sign = true;
      return n;
    }
    if (name == "preset-parts" || name == "parts") {
      n.part_split_prob = 1.0;
      return n;
    }
    throw ValidationError("unknown noise preset '" + std::string(name) +
                          "' (known: none, preset-mild, preset-parts)");
  }
};

/// Splits a mask in two at its centroid along the longer side of its
/// bounding box. The halves are disjoint and union to the input; one of them
/// is empty only when the mask is a single row/column of pixels.
inline std::pair<BitMask, BitMask> split_at_centroid(const BitMask& m) {
  const Box b = tight_box(m);
  BitMask lo(m.width(), m.height()), hi(m.width(), m.height());
  if (!b.valid()) return {lo, hi};
  const bool along_x = b.width() >= b.height();
  std::uint64_t n = 0, sum = 0;
  for (int y = b.y0; y < b.y1; ++y) {
    for (int x = b.x0; x < b.x1; ++x) {
      if (m.test(x, y)) {
        ++n;
        sum += static_cast<std::uint64_t>(along_x ? x : y);
      }
    }
  }
  for (int y = b.y0; y < b.y1; ++y) {
    for (int x = b.x0; x < b.x1; ++x) {
      if (!m.test(x, y)) continue;
      const auto c = static_cast<std::uint64_t>(along_x ? x : y);
      (c * n < sum ? lo : hi).set(x, y);  // c below the mean coordinate
    }
  }
  return {std::move(lo), std::move(hi)};
}

class OracleBackend final : public Classifier, public Detector, public Segmenter {
 public:
  static constexpr double kPartScore = 0.9;

  OracleBackend(const Dataset& dataset, OracleNoise noise) : dataset_(dataset), noise_(noise) {
    noise_.validate();
  }

  [[nodiscard]] const OracleNoise& noise() const noexcept { return noise_; }

  [[nodiscard]] std::vector<ClassPrediction> classify(std::string_view image_id,
                                                      std::span<const std::string>) const override {
    const GroundTruth& gt = dataset_.ground_truth(image_id);
    const int num_classes = dataset_.classes().size();
    const std::vector<int> present = gt.labels();
    std::set<int> positive(present.begin(), present.end());
    if (noise_.label_flip_prob > 0.0) {
      Rng rng(derive_seed(noise_.seed, image_id, "classify"));
      std::set<int> dropped, added;
      for (int c : present) {
        if (!rng.bernoulli(noise_.label_flip_prob)) continue;
        dropped.insert(c);
        if (num_classes > 2) {
          // uniform over foreground classes other than c
          int other = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes - 2)));
          if (other >= c) ++other;
          added.insert(other);
        }
      }
      for (int c : dropped) positive.erase(c);
      positive.insert(added.begin(), added.end());
    }
    std::vector<ClassPrediction> out;
    out.reserve(static_cast<std::size_t>(num_classes - 1));
    for (int c = 1; c < num_classes; ++c) out.push_back({c, positive.count(c) ? 1.0 : 0.0});
    return out;
  }

  /// One detection per ground-truth instance of a requested class, score 1.
  /// Detection ids are instance indices.
  [[nodiscard]] std::vector<Detection> detect(std::string_view image_id, std::span<const int> labels,
                                              double box_threshold, double text_threshold) const override {
    const GroundTruth& gt = dataset_.ground_truth(image_id);
    std::vector<Detection> out;
    if (box_threshold > 1.0 || text_threshold > 1.0) return out;
    for (std::size_t i = 0; i < gt.instances.size(); ++i) {
      const Instance& inst = gt.instances[i];
      if (std::find(labels.begin(), labels.end(), inst.class_id) == labels.end()) continue;
      out.push_back(Detection{jittered_box(image_id, i), dataset_.classes().name(inst.class_id), 1.0,
                              static_cast<int>(i)});
    }
    return out;
  }

  [[nodiscard]] std::vector<MaskCandidate> segment_in_box(std::string_view image_id,
                                                          const Detection& det) const override {
    const GroundTruth& gt = dataset_.ground_truth(image_id);
    if (det.id < 0 || static_cast<std::size_t>(det.id) >= gt.instances.size() ||
        gt.instances[static_cast<std::size_t>(det.id)].class_id != det.box.class_id) {
      throw ValidationError("image '" + std::string(image_id) + "': detection " + std::to_string(det.id) +
                            " does not correspond to a ground-truth instance");
    }
    const auto index = static_cast<std::size_t>(det.id);
    const BitMask& whole = gt.instances[index].mask;
    const int radius = morph_radius(image_id, index);

    std::vector<MaskCandidate> out;
    Rng split_rng(derive_seed(noise_.seed, image_id, "split", index));
    if (split_rng.bernoulli(noise_.part_split_prob)) {
      auto [a, b] = split_at_centroid(whole);
      if (!a.empty() && !b.empty()) {
        out.push_back({rle_encode(morph4(a, radius)), kPartScore, det.id});
        out.push_back({rle_encode(morph4(b, radius)), kPartScore, det.id});
        return out;
      }
    }
    out.push_back({rle_encode(morph4(whole, radius)), 1.0, det.id});
    return out;
  }

  /// Tight instance box with each side shifted by uniform(-f, f) times the
  /// matching side length, rounded, re-ordered and clamped to the image.
  [[nodiscard]] Box jittered_box(std::string_view image_id, std::size_t instance) const {
    const ImageRecord& rec = dataset_.find(image_id);
    const Box tight = dataset_.ground_truth(image_id).instances.at(instance).box;
    const double f = noise_.box_jitter_frac;
    if (f <= 0.0) return tight;
    Rng rng(derive_seed(noise_.seed, image_id, "jitter", instance));
    const double w = tight.width(), h = tight.height();
    int x0 = tight.x0 + static_cast<int>(std::lround(rng.uniform(-f, f) * w));
    int y0 = tight.y0 + static_cast<int>(std::lround(rng.uniform(-f, f) * h));
    int x1 = tight.x1 + static_cast<int>(std::lround(rng.uniform(-f, f) * w));
    int y1 = tight.y1 + static_cast<int>(std::lround(rng.uniform(-f, f) * h));
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    return Box{x0, y0, x1, y1, tight.class_id, 1.0}.clamped(rec.width, rec.height);
  }

  [[nodiscard]] int morph_radius(std::string_view image_id, std::size_t instance) const {
    const int r = noise_.mask_morph_radius;
    if (r == 0 || !noise_.morph_random_sign) return r;
    Rng rng(derive_seed(noise_.seed, image_id, "morph", instance));
    const int mag = r < 0 ? -r : r;
    return rng.below(2) == 0 ? -mag : mag;
  }

 private:
  const Dataset& dataset_;
  OracleNoise noise_;
};

}  // namespace boxseg
