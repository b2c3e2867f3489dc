// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "boxseg/dataio/dataset.hpp"
#include "boxseg/random.hpp"

namespace boxseg {

/// Parameters of a synthetic dataset of disjoint elliptical objects.
struct SyntheticSpec {
  int images = 50;
  int width = 128;
  int height = 128;
  int num_classes = 5;  // foreground classes
  int min_objects = 2;
  int max_objects = 5;
  int max_classes_per_image = 0;  // 0 = no limit
  int min_semi_axis = 8;
  int max_semi_axis = 22;
  int gap = 2;  // minimum 4-step distance between objects
  std::uint64_t seed = 0;
};

inline BitMask rasterize_ellipse(int width, int height, double cx, double cy, double rx, double ry) {
  BitMask m(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) m.set(x, y);
    }
  }
  return m;
}

/// Deterministic in `spec`. Objects never touch: each new ellipse keeps at
/// least `gap` 4-steps from every earlier one, so connected components
/// recover the instances exactly.
inline Dataset make_synthetic_dataset(const SyntheticSpec& spec) {
  std::vector<ImageRecord> records;
  for (int i = 0; i < spec.images; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%04d", i);
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(derive_seed(spec.seed, id, "synthetic", attempt));
      const int wanted = rng.between(spec.min_objects, spec.max_objects);
      std::vector<int> palette;
      if (spec.max_classes_per_image > 0) {
        while (static_cast<int>(palette.size()) < std::min(spec.max_classes_per_image, spec.num_classes)) {
          const int c = rng.between(1, spec.num_classes);
          if (std::find(palette.begin(), palette.end(), c) == palette.end()) palette.push_back(c);
        }
      }
      BitMask occupied(spec.width, spec.height);
      std::vector<Instance> instances;
      for (int tries = 0; tries < 400 && static_cast<int>(instances.size()) < wanted; ++tries) {
        const double rx = rng.between(spec.min_semi_axis, spec.max_semi_axis);
        const double ry = rng.between(spec.min_semi_axis, spec.max_semi_axis);
        if (2 * rx + 2 > spec.width || 2 * ry + 2 > spec.height) continue;
        const double cx = rng.uniform(rx + 1, spec.width - rx - 1);
        const double cy = rng.uniform(ry + 1, spec.height - ry - 1);
        BitMask m = rasterize_ellipse(spec.width, spec.height, cx, cy, rx, ry);
        if (m.empty() || morph4(m, spec.gap).count_and(occupied) > 0) continue;
        const int c = palette.empty() ? rng.between(1, spec.num_classes)
                                      : palette[rng.below(palette.size())];
        occupied |= m;
        Box box = tight_box(m, c, 1.0);
        instances.push_back(Instance{c, std::move(m), box});
      }
      if (static_cast<int>(instances.size()) < spec.min_objects) continue;
      LabelRaster raster(spec.width, spec.height);
      for (const auto& inst : instances) {
        for (int y = inst.box.y0; y < inst.box.y1; ++y)
          for (int x = inst.box.x0; x < inst.box.x1; ++x)
            if (inst.mask.test(x, y)) raster.at(x, y) = static_cast<std::uint8_t>(inst.class_id);
      }
      ImageRecord r;
      r.id = id;
      r.width = spec.width;
      r.height = spec.height;
      r.gt = GroundTruth{std::move(raster), std::move(instances)};
      records.push_back(std::move(r));
      break;
    }
  }
  return Dataset(ClassTable::numbered(spec.num_classes), "synthetic", std::move(records));
}

}  // namespace boxseg
