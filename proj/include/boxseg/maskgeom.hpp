// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Raster primitives: half-open pixel boxes, packed binary masks, the
// column-major uncompressed RLE used in interchange files, label rasters,
// and the overlap measures built on them.

#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "boxseg/error.hpp"

namespace boxseg {

/// Half-open integer rectangle [x0,x1) x [y0,y1) with a class label and a
/// confidence. Area is counted in whole pixels.
struct Box {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  int class_id = 0;
  double score = 1.0;

  /// Builds a box and enforces x0 < x1, y0 < y1 and score in [0,1].
  static Box make(int x0, int y0, int x1, int y1, int class_id = 0, double score = 1.0) {
    Box b{x0, y0, x1, y1, class_id, score};
    if (!b.valid()) {
      throw ValidationError("invalid box (" + std::to_string(x0) + "," + std::to_string(y0) +
                            "," + std::to_string(x1) + "," + std::to_string(y1) + ")");
    }
    return b;
  }

  [[nodiscard]] bool valid() const noexcept {
    return x0 < x1 && y0 < y1 && score >= 0.0 && score <= 1.0;
  }
  [[nodiscard]] int width() const noexcept { return x1 - x0; }
  [[nodiscard]] int height() const noexcept { return y1 - y0; }
  [[nodiscard]] std::int64_t area() const noexcept {
    return static_cast<std::int64_t>(width()) * height();
  }
  [[nodiscard]] bool contains(int x, int y) const noexcept {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  /// True if the box lies inside a width x height image.
  [[nodiscard]] bool inside(int image_width, int image_height) const noexcept {
    return x0 >= 0 && y0 >= 0 && x1 <= image_width && y1 <= image_height;
  }

  /// Clamps to the image; a box that collapses keeps one pixel on the
  /// nearest edge so the area stays positive.
  [[nodiscard]] Box clamped(int image_width, int image_height) const noexcept {
    Box b = *this;
    b.x0 = std::clamp(b.x0, 0, image_width - 1);
    b.y0 = std::clamp(b.y0, 0, image_height - 1);
    b.x1 = std::clamp(b.x1, b.x0 + 1, image_width);
    b.y1 = std::clamp(b.y1, b.y0 + 1, image_height);
    return b;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Pixel count of the intersection of two boxes (0 when disjoint).
inline std::int64_t intersection_area(const Box& a, const Box& b) noexcept {
  const std::int64_t w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const std::int64_t h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return (w > 0 && h > 0) ? w * h : 0;
}

inline double box_iou(const Box& a, const Box& b) noexcept {
  const std::int64_t inter = intersection_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// Binary mask, one bit per pixel, packed row-major: pixel (x,y) is bit
/// y*width + x of a contiguous little-endian word array.
class BitMask {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BitMask(int width, int height) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw ValidationError("mask dimensions must be positive, got " + std::to_string(width) +
                            "x" + std::to_string(height));
    }
    words_.assign((size() + kWordBits - 1) / kWordBits, 0);
  }

  /// Mask with exactly the pixels of `box` (clamped to the image) set.
  static BitMask from_box(int width, int height, const Box& box) {
    BitMask m(width, height);
    const int x0 = std::max(box.x0, 0), x1 = std::min(box.x1, width);
    const int y0 = std::max(box.y0, 0), y1 = std::min(box.y1, height);
    if (x0 >= x1) return m;
    for (int y = y0; y < y1; ++y) m.fill_range(m.index(x0, y), m.index(x1, y));
    return m;
  }

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] std::size_t size() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  [[nodiscard]] std::span<const Word> words() const noexcept { return words_; }

  [[nodiscard]] bool test(int x, int y) const noexcept {
    const std::size_t i = index(x, y);
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1U;
  }

  void set(int x, int y, bool value = true) noexcept {
    const std::size_t i = index(x, y);
    const Word bit = Word{1} << (i % kWordBits);
    if (value) {
      words_[i / kWordBits] |= bit;
    } else {
      words_[i / kWordBits] &= ~bit;
    }
  }

  [[nodiscard]] std::size_t count() const noexcept {
    std::size_t n = 0;
    for (Word w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  [[nodiscard]] bool empty() const noexcept {
    return std::all_of(words_.begin(), words_.end(), [](Word w) { return w == 0; });
  }

  /// Set pixels inside `box` (clamped to the image).
  [[nodiscard]] std::size_t count_in(const Box& box) const noexcept {
    const int x0 = std::max(box.x0, 0), x1 = std::min(box.x1, width_);
    const int y0 = std::max(box.y0, 0), y1 = std::min(box.y1, height_);
    if (x0 >= x1) return 0;
    std::size_t n = 0;
    for (int y = y0; y < y1; ++y) n += count_range(index(x0, y), index(x1, y));
    return n;
  }

  [[nodiscard]] bool same_shape(const BitMask& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  BitMask& operator|=(const BitMask& o) {
    check_shape(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  BitMask& operator&=(const BitMask& o) {
    check_shape(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  /// this &= ~o
  BitMask& subtract(const BitMask& o) {
    check_shape(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
    return *this;
  }

  friend BitMask operator|(BitMask a, const BitMask& b) { return a |= b; }
  friend BitMask operator&(BitMask a, const BitMask& b) { return a &= b; }
  friend bool operator==(const BitMask&, const BitMask&) = default;

  /// popcount(this & o) without materializing the intersection.
  [[nodiscard]] std::size_t count_and(const BitMask& o) const {
    check_shape(o);
    std::size_t n = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      n += static_cast<std::size_t>(std::popcount(words_[i] & o.words_[i]));
    }
    return n;
  }
  /// popcount(this | o)
  [[nodiscard]] std::size_t count_or(const BitMask& o) const {
    check_shape(o);
    std::size_t n = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      n += static_cast<std::size_t>(std::popcount(words_[i] | o.words_[i]));
    }
    return n;
  }

  void check_shape(const BitMask& o) const {
    if (!same_shape(o)) {
      throw ValidationError("mask dimension mismatch: " + std::to_string(width_) + "x" +
                            std::to_string(height_) + " vs " + std::to_string(o.width_) + "x" +
                            std::to_string(o.height_));
    }
  }

 private:
  [[nodiscard]] std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  static constexpr Word span_mask(std::size_t lo, std::size_t hi) noexcept {
    // bits [lo, hi) of one word, 0 <= lo < hi <= 64
    const Word upper = hi == kWordBits ? ~Word{0} : (Word{1} << hi) - 1;
    return upper & ~((Word{1} << lo) - 1);
  }

  [[nodiscard]] std::size_t count_range(std::size_t begin, std::size_t end) const noexcept {
    std::size_t n = 0;
    while (begin < end) {
      const std::size_t w = begin / kWordBits;
      const std::size_t lo = begin % kWordBits;
      const std::size_t hi = std::min(kWordBits, lo + (end - begin));
      n += static_cast<std::size_t>(std::popcount(words_[w] & span_mask(lo, hi)));
      begin += hi - lo;
    }
    return n;
  }

  void fill_range(std::size_t begin, std::size_t end) noexcept {
    while (begin < end) {
      const std::size_t w = begin / kWordBits;
      const std::size_t lo = begin % kWordBits;
      const std::size_t hi = std::min(kWordBits, lo + (end - begin));
      words_[w] |= span_mask(lo, hi);
      begin += hi - lo;
    }
  }

  int width_;
  int height_;
  std::vector<Word> words_;
};

/// Uncompressed COCO-style RLE: alternating run lengths of 0s and 1s over
/// the pixels in column-major order, starting with a (possibly empty) 0-run.
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> counts;

  /// Empty string when valid, otherwise a description of the violation.
  [[nodiscard]] std::string check() const {
    if (width < 1 || height < 1) return "non-positive RLE size";
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (i > 0 && counts[i] == 0) return "zero-length run at position " + std::to_string(i);
      total += counts[i];
    }
    const std::uint64_t expected = static_cast<std::uint64_t>(width) * height;
    if (total != expected) {
      return "RLE counts sum to " + std::to_string(total) + ", expected " +
             std::to_string(expected);
    }
    return {};
  }

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

inline RleMask rle_encode(const BitMask& m) {
  RleMask r{m.width(), m.height(), {}};
  bool current = false;
  std::uint32_t run = 0;
  for (int x = 0; x < m.width(); ++x) {
    for (int y = 0; y < m.height(); ++y) {
      if (m.test(x, y) != current) {
        r.counts.push_back(run);
        run = 0;
        current = !current;
      }
      ++run;
    }
  }
  r.counts.push_back(run);
  return r;
}

inline BitMask rle_decode(const RleMask& r) {
  if (auto problem = r.check(); !problem.empty()) throw ValidationError("invalid RLE: " + problem);
  BitMask m(r.width, r.height);
  std::size_t pos = 0;
  bool value = false;
  const auto h = static_cast<std::size_t>(r.height);
  for (std::uint32_t run : r.counts) {
    if (value) {
      for (std::size_t i = pos; i < pos + run; ++i) {
        m.set(static_cast<int>(i / h), static_cast<int>(i % h));
      }
    }
    pos += run;
    value = !value;
  }
  return m;
}

/// Per-pixel class index image. 0 is background, 255 is ignore.
class LabelRaster {
 public:
  static constexpr std::uint8_t kBackground = 0;
  static constexpr std::uint8_t kIgnore = 255;

  LabelRaster(int width, int height, std::uint8_t fill = kBackground)
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw ValidationError("raster dimensions must be positive, got " + std::to_string(width) +
                            "x" + std::to_string(height));
    }
    labels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  LabelRaster(int width, int height, std::vector<std::uint8_t> labels)
      : LabelRaster(width, height) {
    if (labels.size() != labels_.size()) {
      throw ValidationError("raster buffer has " + std::to_string(labels.size()) +
                            " pixels, expected " + std::to_string(labels_.size()));
    }
    labels_ = std::move(labels);
  }

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] std::uint8_t at(int x, int y) const noexcept {
    return labels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(x)];
  }
  std::uint8_t& at(int x, int y) noexcept {
    return labels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(x)];
  }
  [[nodiscard]] std::span<const std::uint8_t> pixels() const noexcept { return labels_; }
  std::span<std::uint8_t> pixels() noexcept { return labels_; }

  /// Mask of pixels equal to `label`.
  [[nodiscard]] BitMask mask_of(std::uint8_t label) const {
    BitMask m(width_, height_);
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        if (at(x, y) == label) m.set(x, y);
      }
    }
    return m;
  }

  friend bool operator==(const LabelRaster&, const LabelRaster&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> labels_;
};

/// |a & b| / |a | b|, with IoU of two empty masks defined as 1.
inline double mask_iou(const BitMask& a, const BitMask& b) {
  const std::size_t uni = a.count_or(b);
  if (uni == 0) return 1.0;
  return static_cast<double>(a.count_and(b)) / static_cast<double>(uni);
}

/// Fraction of the box explained by the mask: |m & box| / area(box).
inline double coverage(const BitMask& m, const Box& b) {
  if (b.area() <= 0) return 0.0;
  return static_cast<double>(m.count_in(b)) / static_cast<double>(b.area());
}

/// Fraction of the mask lying inside the box: |m & box| / |m|.
inline double containment(const BitMask& m, const Box& b) {
  const std::size_t total = m.count();
  if (total == 0) throw ValidationError("containment of an empty mask is undefined");
  return static_cast<double>(m.count_in(b)) / static_cast<double>(total);
}

inline BitMask clip_mask(const BitMask& m, const Box& b) {
  return m & BitMask::from_box(m.width(), m.height(), b);
}

/// Bitwise OR of all masks. Needs at least one mask to know the dimensions.
inline BitMask union_masks(std::span<const BitMask> masks) {
  if (masks.empty()) throw ValidationError("union of zero masks has no dimensions");
  BitMask out = masks.front();
  for (const BitMask& m : masks.subspan(1)) out |= m;
  return out;
}

/// Tight bounding box of the set pixels. An empty mask yields a box with
/// x0 >= x1, which fails Box::valid().
inline Box tight_box(const BitMask& m, int class_id = 0, double score = 1.0) {
  int x0 = m.width(), y0 = m.height(), x1 = 0, y1 = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.test(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x + 1);
      y1 = std::max(y1, y + 1);
    }
  }
  return Box{x0, y0, x1, y1, class_id, score};
}

/// One 4-neighbourhood morphological step per unit of |radius|: dilation for
/// positive radius, erosion for negative. Pixels outside the image count as
/// unset for erosion.
inline BitMask morph4(const BitMask& m, int radius) {
  BitMask cur = m;
  const int steps = radius < 0 ? -radius : radius;
  const bool dilate = radius > 0;
  for (int s = 0; s < steps; ++s) {
    BitMask next(cur.width(), cur.height());
    for (int y = 0; y < cur.height(); ++y) {
      for (int x = 0; x < cur.width(); ++x) {
        const bool c = cur.test(x, y);
        const bool l = x > 0 && cur.test(x - 1, y);
        const bool r = x + 1 < cur.width() && cur.test(x + 1, y);
        const bool u = y > 0 && cur.test(x, y - 1);
        const bool d = y + 1 < cur.height() && cur.test(x, y + 1);
        next.set(x, y, dilate ? (c || l || r || u || d) : (c && l && r && u && d));
      }
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace boxseg
