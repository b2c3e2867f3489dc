// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "boxseg/dataio/class_table.hpp"
#include "boxseg/error.hpp"
#include "boxseg/maskgeom.hpp"

namespace boxseg {

/// One ground-truth object.
struct Instance {
  int class_id = 0;
  BitMask mask;
  Box box;  // tight box of `mask`, carrying class_id and score 1
};

struct GroundTruth {
  LabelRaster raster;
  std::vector<Instance> instances;

  /// Image-level label set: foreground classes present, ascending.
  [[nodiscard]] std::vector<int> labels() const {
    std::set<int> s;
    for (const auto& inst : instances) s.insert(inst.class_id);
    return {s.begin(), s.end()};
  }
};

struct ImageRecord {
  std::string id;
  int width = 0;
  int height = 0;
  std::string image_path;      // optional, informational
  std::string gt_raster_path;  // optional
  std::optional<GroundTruth> gt;
};

/// Validated set of images sharing a class table.
class Dataset {
 public:
  Dataset(ClassTable classes, std::string split, std::vector<ImageRecord> images)
      : classes_(std::move(classes)), split_(std::move(split)), images_(std::move(images)) {
    std::sort(images_.begin(), images_.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < images_.size(); ++i) {
      const ImageRecord& r = images_[i];
      if (r.id.empty()) throw ValidationError("image record with empty id");
      if (!by_id_.emplace(r.id, i).second) throw ValidationError("duplicate image id '" + r.id + "'");
      if (r.width < 1 || r.height < 1) throw ValidationError("image '" + r.id + "' has non-positive size");
      if (r.gt) validate_gt(r);
    }
  }

  [[nodiscard]] const ClassTable& classes() const noexcept { return classes_; }
  [[nodiscard]] const std::string& split() const noexcept { return split_; }
  [[nodiscard]] const std::vector<ImageRecord>& images() const noexcept { return images_; }
  [[nodiscard]] std::size_t size() const noexcept { return images_.size(); }

  [[nodiscard]] bool contains(std::string_view id) const { return by_id_.count(std::string(id)) > 0; }

  [[nodiscard]] const ImageRecord& find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) throw ValidationError("unknown image id '" + std::string(id) + "'");
    return images_[it->second];
  }

  /// Ground truth for `id`; throws if the image has none.
  [[nodiscard]] const GroundTruth& ground_truth(std::string_view id) const {
    const ImageRecord& r = find(id);
    if (!r.gt) throw ValidationError("image '" + r.id + "' has no ground truth");
    return *r.gt;
  }

  [[nodiscard]] std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(images_.size());
    for (const auto& r : images_) out.push_back(r.id);
    return out;
  }

 private:
  void validate_gt(const ImageRecord& r) const {
    const GroundTruth& gt = *r.gt;
    if (gt.raster.width() != r.width || gt.raster.height() != r.height) {
      throw ValidationError("image '" + r.id + "': ground-truth raster is " +
                            std::to_string(gt.raster.width()) + "x" +
                            std::to_string(gt.raster.height()) + ", declared " +
                            std::to_string(r.width) + "x" + std::to_string(r.height));
    }
    std::set<int> offenders;
    for (std::uint8_t v : gt.raster.pixels()) {
      if (v != LabelRaster::kIgnore && !classes_.contains(v)) offenders.insert(v);
    }
    if (!offenders.empty()) {
      std::string list;
      for (int v : offenders) list += (list.empty() ? "" : ", ") + std::to_string(v);
      throw ValidationError("image '" + r.id + "': raster uses class ids not in the class table: " + list);
    }
    for (std::size_t i = 0; i < gt.instances.size(); ++i) {
      const Instance& inst = gt.instances[i];
      if (inst.class_id < 1 || !classes_.contains(inst.class_id)) {
        throw ValidationError("image '" + r.id + "' instance " + std::to_string(i) +
                              ": invalid class id " + std::to_string(inst.class_id));
      }
      if (inst.mask.width() != r.width || inst.mask.height() != r.height) {
        throw ValidationError("image '" + r.id + "' instance " + std::to_string(i) +
                              ": mask dimensions differ from the image");
      }
    }
  }

  ClassTable classes_;
  std::string split_;
  std::vector<ImageRecord> images_;
  std::map<std::string, std::size_t> by_id_;
};

/// Instances as 4-connected components of each foreground class, in raster
/// scan order of their first pixel.
inline std::vector<Instance> instances_from_raster(const LabelRaster& raster) {
  const int w = raster.width(), h = raster.height();
  std::vector<int> component(raster.size(), -1);
  std::vector<Instance> out;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t c = raster.at(x, y);
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (c == LabelRaster::kBackground || c == LabelRaster::kIgnore || component[idx] >= 0) continue;
      const int id = static_cast<int>(out.size());
      BitMask mask(w, h);
      stack.assign(1, {x, y});
      component[idx] = id;
      while (!stack.empty()) {
        auto [px, py] = stack.back();
        stack.pop_back();
        mask.set(px, py);
        const std::pair<int, int> nbrs[] = {{px - 1, py}, {px + 1, py}, {px, py - 1}, {px, py + 1}};
        for (auto [nx, ny] : nbrs) {
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
          if (component[n] >= 0 || raster.at(nx, ny) != c) continue;
          component[n] = id;
          stack.emplace_back(nx, ny);
        }
      }
      Box box = tight_box(mask, c, 1.0);
      out.push_back(Instance{c, std::move(mask), box});
    }
  }
  return out;
}

/// Instances from an instance-id raster (VOC SegmentationObject style:
/// 0 = none, 255 = ignore, k = object k). Each object's class is the most
/// frequent class label under it; ties go to the smaller class id.
inline std::vector<Instance> instances_from_object_raster(const LabelRaster& objects,
                                                          const LabelRaster& classes) {
  if (objects.width() != classes.width() || objects.height() != classes.height()) {
    throw ValidationError("object raster and class raster differ in size");
  }
  std::map<int, std::map<int, std::size_t>> votes;
  for (int y = 0; y < objects.height(); ++y) {
    for (int x = 0; x < objects.width(); ++x) {
      const int o = objects.at(x, y);
      const int c = classes.at(x, y);
      if (o == 0 || o == LabelRaster::kIgnore) continue;
      if (c == LabelRaster::kBackground || c == LabelRaster::kIgnore) continue;
      ++votes[o][c];
    }
  }
  std::vector<Instance> out;
  for (const auto& [object_id, hist] : votes) {
    int best = 0;
    std::size_t best_n = 0;
    for (const auto& [c, n] : hist) {
      if (n > best_n) best = c, best_n = n;
    }
    BitMask mask = objects.mask_of(static_cast<std::uint8_t>(object_id)) & classes.mask_of(static_cast<std::uint8_t>(best));
    Box box = tight_box(mask, best, 1.0);
    out.push_back(Instance{best, std::move(mask), box});
  }
  return out;
}

}  // namespace boxseg
