// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Quality measures: dataset-level per-class IoU / mIoU over label rasters,
// and all-points average precision for multi-label classification and for
// box detection.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "boxseg/dataio/class_table.hpp"
#include "boxseg/error.hpp"
#include "boxseg/format.hpp"
#include "boxseg/maskgeom.hpp"

namespace boxseg {

struct ClassCounts {
  std::uint64_t intersection = 0;
  std::uint64_t union_count = 0;
  std::uint64_t pred_count = 0;
  std::uint64_t gt_count = 0;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct ApResult {
  std::map<int, double> per_class_ap;  // classes with at least one positive
  double map = 0.0;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [c, ap] : per_class_ap) per[std::to_string(c)] = round_g9(ap);
    return {{"map", round_g9(map)}, {"per_class_ap", std::move(per)}};
  }
};

struct EvalReport {
  std::map<int, double> per_class_iou;  // classes with a non-empty union
  double miou = 0.0;
  std::map<int, ClassCounts> confusion;
  std::optional<ApResult> classification;
  std::optional<ApResult> detection;
  std::string config_fingerprint;
  std::size_t image_count = 0;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json iou = nlohmann::json::object();
    for (const auto& [c, v] : per_class_iou) iou[std::to_string(c)] = round_g9(v);
    nlohmann::json conf = nlohmann::json::object();
    for (const auto& [c, k] : confusion) {
      conf[std::to_string(c)] = {{"intersection", k.intersection},
                                 {"union", k.union_count},
                                 {"pred_count", k.pred_count},
                                 {"gt_count", k.gt_count}};
    }
    nlohmann::json j{{"miou", round_g9(miou)},
                     {"per_class_iou", std::move(iou)},
                     {"confusion", std::move(conf)},
                     {"config_fingerprint", config_fingerprint},
                     {"image_count", image_count}};
    if (classification) j["classification"] = classification->to_json();
    if (detection) j["detection"] = detection->to_json();
    return j;
  }

  /// Sorted keys, floats at 9 significant digits, trailing newline.
  [[nodiscard]] std::string to_canonical_json() const { return to_json().dump(2) + "\n"; }

  /// Human-readable summary.
  [[nodiscard]] std::string table(const ClassTable* classes = nullptr) const {
    auto name = [&](int c) {
      return classes != nullptr && classes->contains(c) ? classes->name(c) : "class " + std::to_string(c);
    };
    std::string out = "images: " + std::to_string(image_count) + "\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-24s %10s\n", "class", "IoU");
    out += line;
    for (const auto& [c, v] : per_class_iou) {
      std::snprintf(line, sizeof line, "%-24s %10.4f\n", name(c).c_str(), v);
      out += line;
    }
    std::snprintf(line, sizeof line, "%-24s %10.4f\n", "mIoU", miou);
    out += line;
    if (classification) {
      std::snprintf(line, sizeof line, "%-24s %10.4f\n", "classification mAP", classification->map);
      out += line;
    }
    if (detection) {
      std::snprintf(line, sizeof line, "%-24s %10.4f\n", "detection mAP", detection->map);
      out += line;
    }
    return out;
  }
};

/// Dataset-level pixel counts. Partial accumulators merge associatively and
/// commutatively, so images can be processed in any order or in parallel.
class ConfusionAccumulator {
 public:
  explicit ConfusionAccumulator(int num_classes) : num_classes_(num_classes) {
    if (num_classes < 2) throw ValidationError("mIoU needs at least 2 classes (background + 1)");
    if (num_classes > 255) throw ValidationError("at most 255 classes fit in an 8-bit raster");
    counts_.resize(static_cast<std::size_t>(num_classes));
  }

  /// Pixels whose ground truth is ignore (255) are skipped entirely. A
  /// prediction of 255 counts as "no class".
  void add(const LabelRaster& pred, const LabelRaster& gt) {
    if (pred.width() != gt.width() || pred.height() != gt.height()) {
      throw ValidationError("prediction is " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                            ", ground truth is " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
    }
    const auto p = pred.pixels();
    const auto g = gt.pixels();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const int gv = g[i];
      const int pv = p[i];
      if (gv == LabelRaster::kIgnore) continue;
      if (gv >= num_classes_) throw ValidationError("ground truth uses class " + std::to_string(gv) + " >= num_classes");
      if (pv != LabelRaster::kIgnore && pv >= num_classes_) {
        throw ValidationError("prediction uses class " + std::to_string(pv) + " >= num_classes");
      }
      ++counts_[static_cast<std::size_t>(gv)].gt_count;
      if (pv != LabelRaster::kIgnore) ++counts_[static_cast<std::size_t>(pv)].pred_count;
      if (pv == gv) ++counts_[static_cast<std::size_t>(gv)].intersection;
    }
    ++images_;
  }

  ConfusionAccumulator& merge(const ConfusionAccumulator& o) {
    if (o.num_classes_ != num_classes_) throw ValidationError("cannot merge accumulators with different class counts");
    for (std::size_t c = 0; c < counts_.size(); ++c) {
      counts_[c].intersection += o.counts_[c].intersection;
      counts_[c].pred_count += o.counts_[c].pred_count;
      counts_[c].gt_count += o.counts_[c].gt_count;
    }
    images_ += o.images_;
    return *this;
  }

  [[nodiscard]] int num_classes() const noexcept { return num_classes_; }
  [[nodiscard]] std::size_t images() const noexcept { return images_; }

  /// IoU_c = I_c / U_c; classes with U_c = 0 are left out of the mean.
  [[nodiscard]] EvalReport report() const {
    EvalReport r;
    r.image_count = images_;
    double sum = 0.0;
    for (std::size_t c = 0; c < counts_.size(); ++c) {
      ClassCounts k = counts_[c];
      k.union_count = k.pred_count + k.gt_count - k.intersection;
      if (k.union_count == 0) continue;
      const double iou = static_cast<double>(k.intersection) / static_cast<double>(k.union_count);
      r.per_class_iou[static_cast<int>(c)] = iou;
      r.confusion[static_cast<int>(c)] = k;
      sum += iou;
    }
    r.miou = r.per_class_iou.empty() ? 0.0 : sum / static_cast<double>(r.per_class_iou.size());
    return r;
  }

 private:
  int num_classes_;
  std::vector<ClassCounts> counts_;
  std::size_t images_ = 0;
};

inline EvalReport miou(std::span<const LabelRaster> preds, std::span<const LabelRaster> gts, int num_classes) {
  if (preds.size() != gts.size()) {
    throw ValidationError("got " + std::to_string(preds.size()) + " predictions for " + std::to_string(gts.size()) +
                          " ground-truth rasters");
  }
  ConfusionAccumulator acc(num_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) acc.add(preds[i], gts[i]);
  return acc.report();
}

// ---------------------------------------------------------------------------
// Average precision

/// All-points AP of a ranked list of hit/miss flags against `positives`
/// relevant items in total: sum over ranks k of (R_k - R_{k-1}) * P_k.
inline double average_precision(const std::vector<bool>& ranked_hits, std::size_t positives) {
  if (positives == 0) return 0.0;
  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked_hits.size(); ++k) {
    if (ranked_hits[k]) ++tp;
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

struct ImageScore {
  std::string image_id;
  int class_id = 0;
  double score = 0.0;
};

/// Per-class AP for multi-label classification. Images are ranked by score,
/// ties by ascending image id. Classes with no positive image are excluded.
inline ApResult ap_classification(std::span<const ImageScore> scores,
                                  const std::map<std::string, std::set<int>>& gt_labels) {
  std::map<int, std::vector<const ImageScore*>> by_class;
  std::set<std::pair<std::string, int>> seen;
  for (const auto& s : scores) {
    if (!gt_labels.count(s.image_id)) throw ValidationError("score for unknown image '" + s.image_id + "'");
    if (!seen.emplace(s.image_id, s.class_id).second) {
      throw ValidationError("duplicate score for image '" + s.image_id + "' class " + std::to_string(s.class_id));
    }
    by_class[s.class_id].push_back(&s);
  }
  std::map<int, std::size_t> positives;
  for (const auto& [img, labels] : gt_labels) {
    for (int c : labels) ++positives[c];
  }
  ApResult out;
  for (const auto& [c, npos] : positives) {
    auto ranked = by_class[c];
    std::sort(ranked.begin(), ranked.end(), [](const ImageScore* a, const ImageScore* b) {
      if (a->score != b->score) return a->score > b->score;
      return a->image_id < b->image_id;
    });
    std::vector<bool> hits;
    hits.reserve(ranked.size());
    for (const ImageScore* s : ranked) hits.push_back(gt_labels.at(s->image_id).count(c) > 0);
    out.per_class_ap[c] = average_precision(hits, npos);
  }
  double sum = 0.0;
  for (const auto& [c, ap] : out.per_class_ap) sum += ap;
  out.map = out.per_class_ap.empty() ? 0.0 : sum / static_cast<double>(out.per_class_ap.size());
  return out;
}

struct ImageBox {
  std::string image_id;
  Box box;  // class_id and score on the box
};

/// Per-class detection AP. Detections are visited by descending score (ties:
/// image id, then input order); each one claims the unmatched ground-truth
/// box of its class and image with the highest IoU, if that IoU reaches
/// iou_match, and is a false positive otherwise.
inline ApResult ap_detection(std::span<const ImageBox> dets, std::span<const ImageBox> gts, double iou_match = 0.5) {
  std::map<int, std::size_t> positives;
  for (const auto& g : gts) ++positives[g.box.class_id];
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].box.score != dets[b].box.score) return dets[a].box.score > dets[b].box.score;
    return dets[a].image_id < dets[b].image_id;
  });
  std::vector<bool> matched(gts.size(), false);
  std::map<int, std::vector<bool>> hits;
  for (std::size_t i : order) {
    const ImageBox& d = dets[i];
    if (!positives.count(d.box.class_id)) continue;
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (matched[g] || gts[g].image_id != d.image_id || gts[g].box.class_id != d.box.class_id) continue;
      const double iou = box_iou(d.box, gts[g].box);
      if (iou > best) best = iou, best_gt = g;
    }
    const bool tp = best_gt < gts.size() && best >= iou_match;
    if (tp) matched[best_gt] = true;
    hits[d.box.class_id].push_back(tp);
  }
  ApResult out;
  for (const auto& [c, npos] : positives) out.per_class_ap[c] = average_precision(hits[c], npos);
  double sum = 0.0;
  for (const auto& [c, ap] : out.per_class_ap) sum += ap;
  out.map = out.per_class_ap.empty() ? 0.0 : sum / static_cast<double>(out.per_class_ap.size());
  return out;
}

}  // namespace boxseg
