// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset ingestion.
//
// voc_like root:
//   classes.json                         class table (unless given explicitly)
//   SegmentationClass/<id>.png           8-bit class-index raster (255 = ignore)
//   SegmentationObject/<id>.png          optional instance-index raster
//   ImageSets/Segmentation/<split>.txt   optional id list
//   JPEGImages/<id>.jpg                  optional, recorded as image_path
//
// coco_like root:
//   classes.json
//   annotations.json   {"images": [...], "categories": [...], "annotations": [...]}
//                      segmentation as polygons or uncompressed RLE
//
// Without SegmentationObject, instances are the 4-connected components of
// each class.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "boxseg/dataio/class_table.hpp"
#include "boxseg/dataio/dataset.hpp"
#include "boxseg/dataio/fsutil.hpp"
#include "boxseg/dataio/png.hpp"
#include "boxseg/error.hpp"

namespace boxseg {

enum class DatasetFormat { voc_like, coco_like };

inline DatasetFormat parse_dataset_format(std::string_view s) {
  if (s == "voc_like" || s == "voc") return DatasetFormat::voc_like;
  if (s == "coco_like" || s == "coco") return DatasetFormat::coco_like;
  throw ValidationError("dataset format must be voc_like or coco_like, got '" + std::string(s) + "'");
}

/// Even-odd fill of a polygon given as flat [x0,y0,x1,y1,...]; a pixel is
/// inside when its centre is.
inline void fill_polygon(BitMask& m, std::span<const double> xy) {
  const std::size_t n = xy.size() / 2;
  if (n < 3) return;
  std::vector<double> xs;
  for (int y = 0; y < m.height(); ++y) {
    const double cy = y + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const double x0 = xy[2 * i], y0 = xy[2 * i + 1];
      const double x1 = xy[2 * ((i + 1) % n)], y1 = xy[2 * ((i + 1) % n) + 1];
      if ((y0 <= cy) == (y1 <= cy)) continue;
      xs.push_back(x0 + (cy - y0) * (x1 - x0) / (y1 - y0));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // pixel centres x + 0.5 in [xs[k], xs[k+1])
      const int from = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int to = std::min(m.width(), static_cast<int>(std::ceil(xs[k + 1] - 0.5)));
      for (int x = from; x < to; ++x) m.set(x, y);
    }
  }
}

namespace detail {

inline ClassTable resolve_class_table(const std::filesystem::path& root, const ClassTable* classes) {
  if (classes != nullptr) return *classes;
  const auto path = root / "classes.json";
  if (!std::filesystem::exists(path)) throw IoError("no class table given and " + path.string() + " is missing");
  return ClassTable::load(path.string());
}

inline nlohmann::json load_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": malformed JSON: " + e.what());
  }
}

inline Dataset load_voc_like(const std::filesystem::path& root, ClassTable classes, const std::string& split) {
  namespace fs = std::filesystem;
  const fs::path class_dir = root / "SegmentationClass";
  if (!fs::is_directory(class_dir)) throw IoError(class_dir.string() + " does not exist");

  std::vector<std::string> ids;
  const fs::path list = root / "ImageSets" / "Segmentation" / (split + ".txt");
  if (fs::exists(list)) {
    std::ifstream in(list);
    for (std::string line; std::getline(in, line);) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty()) ids.push_back(line);
    }
  } else {
    for (const auto& e : fs::directory_iterator(class_dir)) {
      if (e.path().extension() == ".png") ids.push_back(e.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
  }

  std::vector<ImageRecord> records;
  for (const auto& id : ids) {
    ImageRecord r;
    r.id = id;
    r.gt_raster_path = (class_dir / (id + ".png")).string();
    if (const auto jpg = root / "JPEGImages" / (id + ".jpg"); fs::exists(jpg)) r.image_path = jpg.string();
    LabelRaster raster = read_png_labels(r.gt_raster_path);
    r.width = raster.width();
    r.height = raster.height();
    std::vector<Instance> instances;
    if (const auto obj = root / "SegmentationObject" / (id + ".png"); fs::exists(obj)) {
      instances = instances_from_object_raster(read_png_labels(obj.string()), raster);
    } else {
      instances = instances_from_raster(raster);
    }
    r.gt = GroundTruth{std::move(raster), std::move(instances)};
    records.push_back(std::move(r));
  }
  return Dataset(std::move(classes), split, std::move(records));
}

inline Dataset load_coco_like(const std::filesystem::path& root, ClassTable classes, const std::string& split) {
  const nlohmann::json doc = load_json((root / "annotations.json").string());
  std::map<long long, int> category_to_class;
  std::set<std::string> unknown;
  try {
    for (const auto& c : doc.at("categories")) {
      const std::string name = c.at("name").get<std::string>();
      if (auto id = classes.resolve(name)) {
        category_to_class[c.at("id").get<long long>()] = *id;
      } else {
        unknown.insert(name);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("annotations.json: bad categories: " + std::string(e.what()));
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& n : unknown) list += (list.empty() ? "'" : ", '") + n + "'";
    throw ValidationError("categories not in the class table (add an alias?): " + list);
  }

  struct Pending {
    ImageRecord rec;
    std::vector<Instance> instances;
    std::vector<BitMask> crowd;
  };
  std::map<long long, Pending> images;
  try {
    for (const auto& im : doc.at("images")) {
      Pending p;
      const long long id = im.at("id").get<long long>();
      p.rec.id = std::to_string(id);
      p.rec.width = im.at("width").get<int>();
      p.rec.height = im.at("height").get<int>();
      p.rec.image_path = im.value("file_name", "");
      if (p.rec.width < 1 || p.rec.height < 1) throw ValidationError("image " + p.rec.id + " has non-positive size");
      if (!images.emplace(id, std::move(p)).second) throw ValidationError("duplicate image id " + std::to_string(id));
    }
    const auto& anns = doc.at("annotations");
    for (std::size_t a = 0; a < anns.size(); ++a) {
      const auto& ann = anns[a];
      const std::string where = "annotation " + std::to_string(a);
      auto it = images.find(ann.at("image_id").get<long long>());
      if (it == images.end()) throw ValidationError(where + " refers to an unknown image");
      auto cat = category_to_class.find(ann.at("category_id").get<long long>());
      if (cat == category_to_class.end()) throw ValidationError(where + " has an unknown category");
      Pending& p = it->second;
      BitMask mask(p.rec.width, p.rec.height);
      const auto& seg = ann.at("segmentation");
      if (seg.is_object()) {
        if (!seg.at("counts").is_array()) throw ValidationError(where + ": compressed RLE strings are not supported");
        RleMask r;
        r.height = seg.at("size")[0].get<int>();
        r.width = seg.at("size")[1].get<int>();
        r.counts = seg.at("counts").get<std::vector<std::uint32_t>>();
        if (r.width != p.rec.width || r.height != p.rec.height) {
          throw ValidationError(where + ": RLE size differs from the image size");
        }
        try {
          mask = rle_decode(r);
        } catch (const ValidationError& e) {
          throw ValidationError(where + ": " + e.what());
        }
      } else {
        for (const auto& poly : seg) {
          const auto xy = poly.get<std::vector<double>>();
          fill_polygon(mask, xy);
        }
      }
      if (ann.value("iscrowd", 0) != 0) {
        p.crowd.push_back(std::move(mask));
      } else if (!mask.empty()) {
        Box box = tight_box(mask, cat->second, 1.0);
        p.instances.push_back(Instance{cat->second, std::move(mask), box});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("annotations.json: " + std::string(e.what()));
  }

  std::vector<ImageRecord> records;
  for (auto& [id, p] : images) {
    LabelRaster raster(p.rec.width, p.rec.height);
    for (const auto& c : p.crowd) {
      for (int y = 0; y < raster.height(); ++y)
        for (int x = 0; x < raster.width(); ++x)
          if (c.test(x, y)) raster.at(x, y) = LabelRaster::kIgnore;
    }
    for (const auto& inst : p.instances) {
      for (int y = 0; y < raster.height(); ++y)
        for (int x = 0; x < raster.width(); ++x)
          if (inst.mask.test(x, y)) raster.at(x, y) = static_cast<std::uint8_t>(inst.class_id);
    }
    p.rec.gt = GroundTruth{std::move(raster), std::move(p.instances)};
    records.push_back(std::move(p.rec));
  }
  return Dataset(std::move(classes), split, std::move(records));
}

}  // namespace detail

/// Loads and validates a dataset. `classes` overrides root/classes.json.
inline Dataset load_dataset(const std::string& root, DatasetFormat format, const ClassTable* classes = nullptr,
                            const std::string& split = "train") {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("dataset root " + root + " does not exist");
  ClassTable table = detail::resolve_class_table(root, classes);
  return format == DatasetFormat::voc_like ? detail::load_voc_like(root, std::move(table), split)
                                           : detail::load_coco_like(root, std::move(table), split);
}

/// Writes a dataset in voc_like layout, including SegmentationObject rasters
/// so instances survive the round trip exactly.
inline void write_voc_like(const Dataset& ds, const std::string& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(root) / "SegmentationClass", ec);
  fs::create_directories(fs::path(root) / "SegmentationObject", ec);
  fs::create_directories(fs::path(root) / "ImageSets" / "Segmentation", ec);
  if (ec) throw IoError("cannot create dataset directories under " + root);
  write_file_atomic((fs::path(root) / "classes.json").string(), ds.classes().to_json().dump(2) + "\n");
  std::string list;
  for (const auto& r : ds.images()) {
    if (!r.gt) throw ValidationError("image '" + r.id + "' has no ground truth to write");
    write_png_labels((fs::path(root) / "SegmentationClass" / (r.id + ".png")).string(), r.gt->raster);
    if (r.gt->instances.size() > 254) throw ValidationError("image '" + r.id + "' has too many instances");
    LabelRaster objects(r.width, r.height);
    for (std::size_t i = 0; i < r.gt->instances.size(); ++i) {
      const BitMask& m = r.gt->instances[i].mask;
      for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x)
          if (m.test(x, y)) objects.at(x, y) = static_cast<std::uint8_t>(i + 1);
    }
    write_png_labels((fs::path(root) / "SegmentationObject" / (r.id + ".png")).string(), objects);
    list += r.id + "\n";
  }
  write_file_atomic((fs::path(root) / "ImageSets" / "Segmentation" / (ds.split() + ".txt")).string(), list);
}

}  // namespace boxseg
