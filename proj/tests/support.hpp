// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared test helpers: scratch directories, seeded generators and
// brute-force reference implementations. The references work on plain
// per-pixel loops and never call into the code under test beyond
// BitMask::test/set.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include "boxseg/boxseg.hpp"

namespace boxseg::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("boxseg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::string str(const std::string& sub = "") const {
    return sub.empty() ? path_.string() : (path_ / sub).string();
  }

 private:
  std::filesystem::path path_;
};

// --- generators -------------------------------------------------------------

struct Gen {
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  Rng rng;

  int in(int lo, int hi) { return rng.between(lo, hi); }
  double real(double lo, double hi) { return rng.uniform(lo, hi); }

  /// Random mask; density drawn per mask so empty and full masks occur.
  BitMask mask(int w, int h) {
    BitMask m(w, h);
    const int mode = in(0, 5);
    if (mode == 0) return m;
    if (mode == 1) return BitMask::from_box(w, h, Box{0, 0, w, h});
    if (mode == 2) return BitMask::from_box(w, h, box(w, h));
    const double p = real(0.0, 1.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (rng.bernoulli(p)) m.set(x, y);
    return m;
  }

  Box box(int w, int h) {
    const int x0 = in(0, w - 1), x1 = in(x0 + 1, w);
    const int y0 = in(0, h - 1), y1 = in(y0 + 1, h);
    return Box{x0, y0, x1, y1};
  }
};

// --- brute-force references ------------------------------------------------

inline std::int64_t bf_box_cells(const Box& a, const Box& b, bool want_union) {
  const int lo_x = std::min(a.x0, b.x0), hi_x = std::max(a.x1, b.x1);
  const int lo_y = std::min(a.y0, b.y0), hi_y = std::max(a.y1, b.y1);
  std::int64_t n = 0;
  for (int y = lo_y; y < hi_y; ++y) {
    for (int x = lo_x; x < hi_x; ++x) {
      const bool ia = x >= a.x0 && x < a.x1 && y >= a.y0 && y < a.y1;
      const bool ib = x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1;
      n += want_union ? (ia || ib) : (ia && ib);
    }
  }
  return n;
}

inline double bf_box_iou(const Box& a, const Box& b) {
  return static_cast<double>(bf_box_cells(a, b, false)) / static_cast<double>(bf_box_cells(a, b, true));
}

inline double bf_mask_iou(const BitMask& a, const BitMask& b) {
  std::int64_t inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      inter += a.test(x, y) && b.test(x, y);
      uni += a.test(x, y) || b.test(x, y);
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline std::int64_t bf_in_box(const BitMask& m, const Box& b) {
  std::int64_t n = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) n += m.test(x, y) && x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1;
  return n;
}

inline std::int64_t bf_count(const BitMask& m) {
  std::int64_t n = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) n += m.test(x, y);
  return n;
}

inline double bf_coverage(const BitMask& m, const Box& b) {
  return static_cast<double>(bf_in_box(m, b)) / static_cast<double>((b.x1 - b.x0) * (b.y1 - b.y0));
}

inline double bf_containment(const BitMask& m, const Box& b) {
  return static_cast<double>(bf_in_box(m, b)) / static_cast<double>(bf_count(m));
}

inline BitMask bf_clip(const BitMask& m, const Box& b) {
  BitMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.test(x, y) && x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1) out.set(x, y);
  return out;
}

/// Column-major runs starting with a 0-run, by enumerating pixels.
inline std::vector<std::uint32_t> bf_rle_counts(const BitMask& m) {
  std::vector<bool> flat;
  for (int x = 0; x < m.width(); ++x)
    for (int y = 0; y < m.height(); ++y) flat.push_back(m.test(x, y));
  std::vector<std::uint32_t> counts;
  bool value = false;
  std::size_t i = 0;
  while (i < flat.size()) {
    std::uint32_t run = 0;
    while (i < flat.size() && flat[i] == value) ++run, ++i;
    counts.push_back(run);
    value = !value;
  }
  if (counts.empty()) counts.push_back(0);
  return counts;
}

/// 4-neighbourhood dilation/erosion by checking every pixel's diamond of
/// radius |r| directly (pixels outside the image count as unset).
inline BitMask bf_morph(const BitMask& m, int r) {
  BitMask out(m.width(), m.height());
  const int k = std::abs(r);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool any = false, all = true;
      for (int dy = -k; dy <= k; ++dy) {
        for (int dx = -k; dx <= k; ++dx) {
          if (std::abs(dx) + std::abs(dy) > k) continue;
          const int xx = x + dx, yy = y + dy;
          const bool v = xx >= 0 && yy >= 0 && xx < m.width() && yy < m.height() && m.test(xx, yy);
          any = any || v;
          all = all && v;
        }
      }
      out.set(x, y, r >= 0 ? any : all);
    }
  }
  return out;
}

/// Textbook per-class NMS: repeatedly take the best remaining detection and
/// discard everything of its class overlapping it by more than `t`.
inline std::vector<Detection> bf_nms(const std::vector<Detection>& dets, double t) {
  auto better = [](const Detection& a, const Detection& b) {
    if (a.box.score != b.box.score) return a.box.score > b.box.score;
    const auto area_a = (a.box.x1 - a.box.x0) * (a.box.y1 - a.box.y0);
    const auto area_b = (b.box.x1 - b.box.x0) * (b.box.y1 - b.box.y0);
    if (area_a != area_b) return area_a < area_b;
    return std::make_tuple(a.box.x0, a.box.y0, a.box.x1, a.box.y1) <
           std::make_tuple(b.box.x0, b.box.y0, b.box.x1, b.box.y1);
  };
  std::map<int, std::vector<Detection>> by_class;
  for (const auto& d : dets) by_class[d.box.class_id].push_back(d);
  std::vector<Detection> kept;
  for (auto& [c, remaining] : by_class) {
    while (!remaining.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < remaining.size(); ++i) {
        if (better(remaining[i], remaining[best])) best = i;
      }
      const Detection top = remaining[best];
      kept.push_back(top);
      std::vector<Detection> next;
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        if (i != best && bf_box_iou(top.box, remaining[i].box) <= t) next.push_back(remaining[i]);
      }
      remaining = std::move(next);
    }
  }
  std::stable_sort(kept.begin(), kept.end(), better);
  return kept;
}

/// PR-curve integration: precision and recall tabulated at every rank from
/// scratch, then summed as (R_k - R_{k-1}) * P_k.
inline double bf_ap(const std::vector<bool>& hits, std::size_t positives) {
  if (positives == 0) return 0.0;
  std::vector<double> precision, recall;
  for (std::size_t k = 1; k <= hits.size(); ++k) {
    std::size_t tp = 0;
    for (std::size_t i = 0; i < k; ++i) tp += hits[i];
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
  }
  double ap = 0.0;
  for (std::size_t k = 0; k < hits.size(); ++k) {
    ap += (recall[k] - (k == 0 ? 0.0 : recall[k - 1])) * precision[k];
  }
  return ap;
}

/// A small dataset built directly from instance masks on one image each.
inline Dataset dataset_of(int num_classes, const std::vector<std::vector<Instance>>& images, int w, int h) {
  std::vector<ImageRecord> records;
  for (std::size_t i = 0; i < images.size(); ++i) {
    ImageRecord r;
    r.id = "img" + std::to_string(i);
    r.width = w;
    r.height = h;
    LabelRaster raster(w, h);
    for (const auto& inst : images[i]) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (inst.mask.test(x, y)) raster.at(x, y) = static_cast<std::uint8_t>(inst.class_id);
    }
    r.gt = GroundTruth{std::move(raster), images[i]};
    records.push_back(std::move(r));
  }
  return Dataset(ClassTable::numbered(num_classes), "test", std::move(records));
}

inline Instance instance(int class_id, BitMask m) {
  const Box b = tight_box(m, class_id, 1.0);
  return Instance{class_id, std::move(m), b};
}

}  // namespace boxseg::testing
