// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pseudo-label generation: label selection, per-class NMS, hierarchical
// whole-over-part mask selection inside each box, and class-aware
// compositing into a label raster.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "boxseg/backends/types.hpp"
#include "boxseg/dataio/dataset.hpp"
#include "boxseg/error.hpp"
#include "boxseg/format.hpp"
#include "boxseg/maskgeom.hpp"
#include "boxseg/pipeline/config.hpp"

namespace boxseg {

struct ImageSize {
  int width = 0;
  int height = 0;
};

// ---------------------------------------------------------------------------
// Label selection

/// Up to top_n classes scoring at least cls_score_min, best first; equal
/// scores go to the smaller class id.
inline std::vector<int> select_labels(std::span<const ClassPrediction> preds, const PipelineConfig& cfg) {
  std::vector<ClassPrediction> passing;
  for (const auto& p : preds) {
    if (p.score >= cfg.cls_score_min) passing.push_back(p);
  }
  std::sort(passing.begin(), passing.end(), [](const ClassPrediction& a, const ClassPrediction& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.class_id < b.class_id;
  });
  std::vector<int> out;
  for (const auto& p : passing) {
    if (static_cast<int>(out.size()) == cfg.top_n) break;
    if (std::find(out.begin(), out.end(), p.class_id) == out.end()) out.push_back(p.class_id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Non-maximum suppression

/// Total order used by NMS and compositing: higher score first, then the
/// smaller box, then lexicographic coordinates.
inline bool detection_precedes(const Detection& a, const Detection& b) {
  if (a.box.score != b.box.score) return a.box.score > b.box.score;
  if (a.box.area() != b.box.area()) return a.box.area() < b.box.area();
  return std::tie(a.box.x0, a.box.y0, a.box.x1, a.box.y1) < std::tie(b.box.x0, b.box.y0, b.box.x1, b.box.y1);
}

/// Greedy NMS run independently per class: a detection survives unless a
/// kept detection of the same class overlaps it with IoU > nms_iou. Output is
/// in detection_precedes order.
inline std::vector<Detection> nms_per_class(std::vector<Detection> dets, double nms_iou) {
  std::stable_sort(dets.begin(), dets.end(), detection_precedes);
  std::vector<Detection> kept;
  kept.reserve(dets.size());
  for (auto& d : dets) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.box.class_id == d.box.class_id && box_iou(k.box, d.box) > nms_iou;
    });
    if (!suppressed) kept.push_back(std::move(d));
  }
  return kept;
}

// ---------------------------------------------------------------------------
// In-box selection

enum class CandidateFate {
  chosen,
  empty_mask,
  leaks_outside_box,
  whole_preferred,
  insufficient_union_gain,
  union_stopped,
};

inline std::string_view describe(CandidateFate f) {
  switch (f) {
    case CandidateFate::chosen: return "chosen";
    case CandidateFate::empty_mask: return "empty mask";
    case CandidateFate::leaks_outside_box: return "leaks outside box";
    case CandidateFate::whole_preferred: return "whole mask preferred";
    case CandidateFate::insufficient_union_gain: return "insufficient union gain";
    case CandidateFate::union_stopped: return "union growth stopped";
  }
  return "unknown";
}

struct CandidateRecord {
  int index = 0;
  double coverage = 0.0;
  double containment = 0.0;  // 0 for empty masks
  double proposal_score = 0.0;
  int rank = -1;               // position among survivors, -1 if filtered out
  std::int64_t new_pixels = -1;  // in-box pixels added to the union, -1 if not tried
  CandidateFate fate = CandidateFate::chosen;
};

/// Complete account of one box: every candidate appears exactly once.
struct SelectionTrace {
  int box_id = 0;
  Box box;
  std::vector<CandidateRecord> candidates;
  std::vector<int> chosen;  // candidate indices
  bool whole_selected = false;
  std::size_t selected_pixels = 0;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : candidates) {
      cands.push_back({{"index", c.index},
                       {"coverage", round_g9(c.coverage)},
                       {"containment", round_g9(c.containment)},
                       {"proposal_score", round_g9(c.proposal_score)},
                       {"rank", c.rank},
                       {"new_pixels", c.new_pixels},
                       {"fate", std::string(describe(c.fate))}});
    }
    return {{"box_id", box_id},
            {"box", {box.x0, box.y0, box.x1, box.y1}},
            {"class_id", box.class_id},
            {"score", round_g9(box.score)},
            {"candidates", std::move(cands)},
            {"chosen", chosen},
            {"whole_selected", whole_selected},
            {"selected_pixels", selected_pixels}};
  }
};

/// Whole-over-part selection of the candidates proposed for one box.
///
///  1. Candidates whose containment in the box is below containment_min are
///     rejected as leaking.
///  2. Survivors are ranked by coverage of the box (then proposal score, then
///     index).
///  3. If the best survivor covers at least whole_coverage_min of the box it
///     is taken alone.
///  4. Otherwise survivors are unioned in rank order for as long as each one
///     adds at least union_gain_min * area(box) new in-box pixels.
///  5. The union is clipped to the box.
inline std::pair<BitMask, SelectionTrace> select_in_box(std::span<const MaskCandidate> cands, const Box& box,
                                                        const PipelineConfig& cfg, ImageSize size) {
  const Box b = box.clamped(size.width, size.height);
  SelectionTrace trace;
  trace.box = box;
  trace.box_id = cands.empty() ? 0 : cands.front().box_id;

  std::vector<BitMask> masks;
  masks.reserve(cands.size());
  std::vector<int> survivors;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    BitMask m = rle_decode(cands[i].mask);
    if (m.width() != size.width || m.height() != size.height) {
      throw ValidationError("candidate " + std::to_string(i) + " is " + std::to_string(m.width()) + "x" +
                            std::to_string(m.height()) + ", image is " + std::to_string(size.width) + "x" +
                            std::to_string(size.height));
    }
    CandidateRecord rec;
    rec.index = static_cast<int>(i);
    rec.proposal_score = cands[i].proposal_score;
    if (m.empty()) {
      rec.fate = CandidateFate::empty_mask;
    } else {
      rec.coverage = coverage(m, b);
      rec.containment = containment(m, b);
      if (rec.containment < cfg.containment_min) {
        rec.fate = CandidateFate::leaks_outside_box;
      } else {
        survivors.push_back(static_cast<int>(i));
      }
    }
    trace.candidates.push_back(rec);
    masks.push_back(std::move(m));
  }

  std::sort(survivors.begin(), survivors.end(), [&](int a, int c) {
    const auto& ra = trace.candidates[static_cast<std::size_t>(a)];
    const auto& rc = trace.candidates[static_cast<std::size_t>(c)];
    if (ra.coverage != rc.coverage) return ra.coverage > rc.coverage;
    if (ra.proposal_score != rc.proposal_score) return ra.proposal_score > rc.proposal_score;
    return a < c;
  });
  for (std::size_t r = 0; r < survivors.size(); ++r) {
    trace.candidates[static_cast<std::size_t>(survivors[r])].rank = static_cast<int>(r);
  }

  BitMask selected(size.width, size.height);
  if (survivors.empty()) return {std::move(selected), std::move(trace)};

  const auto top = static_cast<std::size_t>(survivors.front());
  selected = clip_mask(masks[top], b);
  trace.chosen.push_back(static_cast<int>(top));
  trace.candidates[top].new_pixels = static_cast<std::int64_t>(selected.count());

  if (trace.candidates[top].coverage >= cfg.whole_coverage_min) {
    trace.whole_selected = true;
    for (std::size_t r = 1; r < survivors.size(); ++r) {
      trace.candidates[static_cast<std::size_t>(survivors[r])].fate = CandidateFate::whole_preferred;
    }
  } else {
    const double min_gain = cfg.union_gain_min * static_cast<double>(b.area());
    bool stopped = false;
    for (std::size_t r = 1; r < survivors.size(); ++r) {
      const auto idx = static_cast<std::size_t>(survivors[r]);
      CandidateRecord& rec = trace.candidates[idx];
      if (stopped) {
        rec.fate = CandidateFate::union_stopped;
        continue;
      }
      BitMask added = clip_mask(masks[idx], b);
      added.subtract(selected);
      rec.new_pixels = static_cast<std::int64_t>(added.count());
      if (static_cast<double>(rec.new_pixels) >= min_gain) {
        selected |= added;
        trace.chosen.push_back(static_cast<int>(idx));
      } else {
        rec.fate = CandidateFate::insufficient_union_gain;
        stopped = true;
      }
    }
  }
  trace.selected_pixels = selected.count();
  return {std::move(selected), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Compositing

struct Selection {
  BitMask mask;
  int class_id = 0;
  double score = 0.0;
};

/// Marks painted pixels within `band` 4-steps of a label change as ignore.
inline void apply_boundary_band(LabelRaster& raster, int band) {
  if (band <= 0) return;
  const int w = raster.width(), h = raster.height();
  const LabelRaster orig = raster;
  std::vector<int> dist(orig.size(), -1);
  std::vector<std::pair<int, int>> frontier;
  auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  auto differs = [&](int x, int y, int nx, int ny) {
    return nx >= 0 && ny >= 0 && nx < w && ny < h && orig.at(nx, ny) != orig.at(x, y);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (orig.at(x, y) == LabelRaster::kBackground) continue;
      if (differs(x, y, x - 1, y) || differs(x, y, x + 1, y) || differs(x, y, x, y - 1) || differs(x, y, x, y + 1)) {
        dist[idx(x, y)] = 0;
        frontier.emplace_back(x, y);
      }
    }
  }
  for (int d = 1; d < band && !frontier.empty(); ++d) {
    std::vector<std::pair<int, int>> next;
    for (auto [x, y] : frontier) {
      const std::pair<int, int> nbrs[] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (auto [nx, ny] : nbrs) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        if (orig.at(nx, ny) != orig.at(x, y) || dist[idx(nx, ny)] >= 0) continue;
        dist[idx(nx, ny)] = d;
        next.emplace_back(nx, ny);
      }
    }
    frontier = std::move(next);
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (dist[idx(x, y)] >= 0) raster.at(x, y) = LabelRaster::kIgnore;
    }
  }
}

/// Paints selections onto a background raster. Paint order is ascending
/// score, then descending mask area, then descending class id, so the most
/// confident selection wins any overlap.
inline LabelRaster compose(ImageSize size, std::span<const Selection> selections, const PipelineConfig& cfg) {
  LabelRaster out(size.width, size.height);
  std::vector<std::size_t> order(selections.size());
  std::vector<std::size_t> areas(selections.size());
  for (std::size_t i = 0; i < selections.size(); ++i) {
    const Selection& s = selections[i];
    if (s.class_id < 1 || s.class_id >= LabelRaster::kIgnore) {
      throw ValidationError("selection " + std::to_string(i) + " has class id " + std::to_string(s.class_id) +
                            "; painted classes must be in 1..254");
    }
    if (s.mask.width() != size.width || s.mask.height() != size.height) {
      throw ValidationError("selection " + std::to_string(i) + " mask does not match the image size");
    }
    order[i] = i;
    areas[i] = s.mask.count();
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Selection& sa = selections[a];
    const Selection& sb = selections[b];
    if (sa.score != sb.score) return sa.score < sb.score;
    if (areas[a] != areas[b]) return areas[a] > areas[b];
    return sa.class_id > sb.class_id;
  });
  for (std::size_t i : order) {
    const Selection& s = selections[i];
    const auto label = static_cast<std::uint8_t>(s.class_id);
    for (int y = 0; y < size.height; ++y) {
      for (int x = 0; x < size.width; ++x) {
        if (s.mask.test(x, y)) out.at(x, y) = label;
      }
    }
  }
  apply_boundary_band(out, cfg.ignore_boundary_band);
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end generation

struct GenerationResult {
  std::string image_id;
  LabelRaster raster;
  std::vector<int> labels;
  std::vector<Detection> detections;
  std::vector<SelectionTrace> traces;

  [[nodiscard]] nlohmann::json traces_json() const {
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& t : traces) boxes.push_back(t.to_json());
    return {{"image_id", image_id}, {"labels", labels}, {"boxes", std::move(boxes)}};
  }
};

/// Runs the full chain for one image. Ground truth is consulted only for the
/// sources configured as ground_truth.
inline GenerationResult generate(const Dataset& dataset, const Backends& backends, std::string_view image_id,
                                 const PipelineConfig& cfg) {
  cfg.validate();
  const ImageRecord& rec = dataset.find(image_id);
  const ImageSize size{rec.width, rec.height};
  const ClassTable& classes = dataset.classes();

  GenerationResult result{rec.id, LabelRaster(rec.width, rec.height), {}, {}, {}};

  if (cfg.labels_source == Source::predicted) {
    const std::vector<std::string> names = classes.names();
    const auto preds = backends.classifier.classify(rec.id, names);
    for (const auto& p : preds) {
      if (p.class_id < 1 || !classes.contains(p.class_id)) {
        throw ValidationError("image '" + rec.id + "': classifier returned unknown class id " +
                              std::to_string(p.class_id));
      }
    }
    result.labels = select_labels(preds, cfg);
  } else {
    result.labels = dataset.ground_truth(rec.id).labels();
  }

  if (!result.labels.empty()) {
    if (cfg.boxes_source == Source::predicted) {
      result.detections = nms_per_class(
          backends.detector.detect(rec.id, result.labels, cfg.box_threshold, cfg.text_threshold), cfg.nms_iou);
    } else {
      const GroundTruth& gt = dataset.ground_truth(rec.id);
      for (std::size_t i = 0; i < gt.instances.size(); ++i) {
        const Instance& inst = gt.instances[i];
        if (std::find(result.labels.begin(), result.labels.end(), inst.class_id) == result.labels.end()) continue;
        result.detections.push_back(Detection{inst.box, classes.name(inst.class_id), 1.0, static_cast<int>(i)});
      }
    }
  }

  std::vector<Selection> selections;
  selections.reserve(result.detections.size());
  for (const Detection& det : result.detections) {
    const auto cands = backends.segmenter.segment_in_box(rec.id, det);
    auto [mask, trace] = select_in_box(cands, det.box, cfg, size);
    trace.box_id = det.id;
    result.traces.push_back(std::move(trace));
    selections.push_back(Selection{std::move(mask), det.box.class_id, det.box.score});
  }
  result.raster = compose(size, selections, cfg);
  return result;
}

/// generate() over many images on up to `jobs` threads. Results come back in
/// the order of `ids`; the first failing image (in that order) is rethrown.
inline std::vector<GenerationResult> generate_all(const Dataset& dataset, const Backends& backends,
                                                  std::span<const std::string> ids, const PipelineConfig& cfg,
                                                  int jobs = 1) {
  cfg.validate();
  std::vector<std::optional<GenerationResult>> slots(ids.size());
  std::vector<std::exception_ptr> errors(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      try {
        slots[i] = generate(dataset, backends, ids[i], cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::max(1, jobs));
  if (n == 1 || ids.size() <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(n, ids.size()); ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<GenerationResult> out;
  out.reserve(ids.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace boxseg
