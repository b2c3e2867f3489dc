// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"

namespace boxseg {
namespace {

using testing::TempDir;

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

ClassTable vehicles() {
  return ClassTable({{0, "background", {}}, {1, "person", {}}, {2, "motorcycle", {"motor bikes", "motorbike"}}});
}

// --- class table -------------------------------------------------------------

TEST(ClassTable, AliasResolvesToCanonicalId) {
  const ClassTable t = vehicles();
  EXPECT_EQ(t.resolve("motor bikes"), 2);
  EXPECT_EQ(t.resolve("Motor_Bikes"), 2);
  EXPECT_EQ(t.resolve("motorcycle"), 2);
  EXPECT_EQ(t.resolve("bicycle"), std::nullopt);
  EXPECT_EQ(t.name(2), "motorcycle");
}

TEST(ClassTable, RejectsBadTables) {
  EXPECT_THROW(ClassTable({{1, "person", {}}}), ValidationError);
  EXPECT_THROW(ClassTable({{0, "background", {}}, {2, "person", {}}}), ValidationError);
  EXPECT_THROW(ClassTable({{0, "background", {}}, {1, "a", {}}, {2, "b", {"a"}}}), ValidationError);
}

TEST(ClassTable, JsonRoundTrip) {
  const ClassTable t = vehicles();
  const ClassTable back = ClassTable::from_json(t.to_json());
  EXPECT_EQ(back.names(), t.names());
  EXPECT_EQ(back.resolve("motorbike"), 2);
}

// --- PNG ---------------------------------------------------------------------

TEST(Png, RoundTripIsBitExact) {
  TempDir dir("png");
  std::vector<std::uint8_t> px;
  for (int i = 0; i < 7 * 5; ++i) px.push_back(static_cast<std::uint8_t>(i % 3 == 0 ? 255 : i));
  const LabelRaster r(7, 5, px);
  write_png_labels(dir.str("a.png"), r);
  EXPECT_EQ(read_png_labels(dir.str("a.png")), r);
  EXPECT_THROW((void)read_png_labels(dir.str("missing.png")), IoError);
  write_text(dir.path() / "junk.png", "not a png");
  EXPECT_THROW((void)read_png_labels(dir.str("junk.png")), Error);
}

// --- dataset loading ------------------------------------------------------------

TEST(LoadDataset, VocLikeFixtureOfThreeImages) {
  TempDir dir("voc");
  SyntheticSpec spec;
  spec.images = 3;
  spec.width = 32;
  spec.height = 24;
  spec.min_semi_axis = 3;
  spec.max_semi_axis = 6;
  spec.seed = 12;
  const Dataset ds = make_synthetic_dataset(spec);
  write_voc_like(ds, dir.str());
  const Dataset back = load_dataset(dir.str(), DatasetFormat::voc_like, nullptr, "synthetic");
  ASSERT_EQ(back.size(), 3u);
  for (const auto& id : ds.ids()) {
    EXPECT_EQ(back.ground_truth(id).raster, ds.ground_truth(id).raster);
    const auto& a = back.ground_truth(id).instances;
    const auto& b = ds.ground_truth(id).instances;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].mask, b[i].mask);
      EXPECT_EQ(a[i].box, b[i].box);
    }
  }
}

TEST(LoadDataset, ConnectedComponentsWithoutObjectRasters) {
  TempDir dir("cc");
  write_text(dir.path() / "classes.json", vehicles().to_json().dump());
  LabelRaster r(6, 4);
  r.at(0, 0) = 1;
  r.at(1, 0) = 1;
  r.at(4, 2) = 1;  // separate component
  r.at(5, 3) = 2;
  std::filesystem::create_directories(dir.path() / "SegmentationClass");
  write_png_labels(dir.str("SegmentationClass/x.png"), r);
  const Dataset ds = load_dataset(dir.str(), DatasetFormat::voc_like);
  const auto& inst = ds.ground_truth("x").instances;
  ASSERT_EQ(inst.size(), 3u);
  EXPECT_EQ(inst[0].class_id, 1);
  EXPECT_EQ(inst[0].box, (Box{0, 0, 2, 1, 1, 1.0}));
  EXPECT_EQ(inst[1].box, (Box{4, 2, 5, 3, 1, 1.0}));
  EXPECT_EQ(inst[2].class_id, 2);
}

TEST(LoadDataset, UnknownClassIdInRasterIsRejected) {
  TempDir dir("bad");
  write_text(dir.path() / "classes.json", vehicles().to_json().dump());
  LabelRaster r(4, 4);
  r.at(1, 1) = 254;
  std::filesystem::create_directories(dir.path() / "SegmentationClass");
  write_png_labels(dir.str("SegmentationClass/oops.png"), r);
  try {
    (void)load_dataset(dir.str(), DatasetFormat::voc_like);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("oops"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, MissingRootIsIoError) {
  EXPECT_THROW((void)load_dataset("/nonexistent/boxseg", DatasetFormat::voc_like), IoError);
}

const char* kCoco = R"({
  "images": [{"id": 7, "width": 10, "height": 8, "file_name": "7.jpg"}],
  "categories": [{"id": 1, "name": "person"}, {"id": 4, "name": "motor bikes"}],
  "annotations": [
    {"image_id": 7, "category_id": 4, "iscrowd": 0,
     "segmentation": [[1, 1, 5, 1, 5, 4, 1, 4]]},
    {"image_id": 7, "category_id": 1, "iscrowd": 0,
     "segmentation": {"size": [8, 10], "counts": [46, 2, 6, 2, 24]}},
    {"image_id": 7, "category_id": 1, "iscrowd": 1,
     "segmentation": [[8, 6, 10, 6, 10, 8, 8, 8]]}
  ]})";

TEST(LoadDataset, CocoLikePolygonsRleAliasesAndCrowd) {
  TempDir dir("coco");
  write_text(dir.path() / "annotations.json", kCoco);
  const ClassTable t = vehicles();
  const Dataset ds = load_dataset(dir.str(), DatasetFormat::coco_like, &t);
  const GroundTruth& gt = ds.ground_truth("7");
  ASSERT_EQ(gt.instances.size(), 2u);
  EXPECT_EQ(gt.instances[0].class_id, 2);
  EXPECT_EQ(gt.instances[0].box, (Box{1, 1, 5, 4, 2, 1.0}));
  EXPECT_EQ(gt.instances[0].mask.count(), 12u);
  // column-major: 46 zeros end at column 5 row 6
  EXPECT_EQ(gt.instances[1].class_id, 1);
  EXPECT_EQ(gt.instances[1].box, (Box{5, 6, 7, 8, 1, 1.0}));
  EXPECT_EQ(gt.raster.at(9, 7), LabelRaster::kIgnore);
  EXPECT_EQ(gt.raster.at(2, 2), 2);
}

TEST(LoadDataset, CocoUnknownCategoriesAreListed) {
  TempDir dir("coco_bad");
  std::string doc = kCoco;
  doc.replace(doc.find("\"person\""), 8, "\"giraffe\"");
  write_text(dir.path() / "annotations.json", doc);
  const ClassTable t = vehicles();
  try {
    (void)load_dataset(dir.str(), DatasetFormat::coco_like, &t);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("giraffe"), std::string::npos) << e.what();
  }
}

TEST(FillPolygon, PixelCentreRule) {
  BitMask m(6, 6);
  const std::vector<double> square{1, 1, 4, 1, 4, 4, 1, 4};
  fill_polygon(m, square);
  EXPECT_EQ(m, BitMask::from_box(6, 6, Box{1, 1, 4, 4}));
}

// --- interchange -----------------------------------------------------------------

InterchangeRecord sample_record() {
  InterchangeRecord rec;
  rec.image_id = "2007_000032";
  rec.width = 6;
  rec.height = 5;
  rec.classifier_scores = {{1, 0.25}, {2, 0.875}};
  InterchangeDetection d{"motor bikes", Box{1, 0, 5, 4, 2, 0.75}, 0.5, {}};
  d.candidates.push_back({rle_encode(BitMask::from_box(6, 5, Box{1, 1, 4, 4})), 0.9});
  d.candidates.push_back({rle_encode(BitMask::from_box(6, 5, Box{2, 0, 5, 2})), 0.6});
  rec.detections = {d};
  rec.producer = {"adapter", "0.1", "person . motor bikes ."};
  return with_content_hash(rec);
}

TEST(Interchange, WriteReadRoundTrip) {
  TempDir dir("ix");
  const InterchangeRecord rec = sample_record();
  write_interchange(rec, dir.str("r.json"));
  const InterchangeRecord back = read_interchange(dir.str("r.json"));
  EXPECT_EQ(back, rec);
  EXPECT_EQ(serialize_interchange(back), serialize_interchange(rec));
  const ClassTable t = vehicles();
  EXPECT_NO_THROW((void)read_interchange(dir.str("r.json"), &t));
}

TEST(Interchange, TamperedCountsFailHashCheck) {
  std::string text = serialize_interchange(sample_record());
  auto j = nlohmann::json::parse(text);
  auto& counts = j["detections"][0]["candidates"][0]["rle"]["counts"];
  counts[1] = counts[1].get<int>() - 1;
  counts[2] = counts[2].get<int>() + 1;
  EXPECT_THROW((void)parse_interchange(j.dump(), "t"), HashMismatchError);
}

TEST(Interchange, BadRunSumNamesTheDetection) {
  InterchangeRecord rec = sample_record();
  rec.detections[0].candidates[1].mask.counts.back() += 3;
  nlohmann::json doc = interchange_payload(rec);
  doc["content_hash"] = content_hash_of(doc);
  try {
    (void)parse_interchange(doc.dump(), "t");
    FAIL() << "expected a validation error";
  } catch (const HashMismatchError&) {
    FAIL() << "hash was recomputed; this must be a semantic error";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("detection 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("candidate 1"), std::string::npos) << msg;
  }
}

TEST(Interchange, ErrorKindsAreDistinct) {
  EXPECT_THROW((void)parse_interchange("{not json", "t"), MalformedJsonError);
  auto j = nlohmann::json::parse(serialize_interchange(sample_record()));
  j["schema_version"] = 2;
  EXPECT_THROW((void)parse_interchange(j.dump(), "t"), SchemaVersionError);
  j["schema_version"] = 1;
  j.erase("content_hash");
  EXPECT_THROW((void)parse_interchange(j.dump(), "t"), HashMismatchError);
}

TEST(Interchange, ClassTableChecksIds) {
  InterchangeRecord rec = sample_record();
  rec.detections[0].box.class_id = 9;
  EXPECT_NO_THROW(validate_interchange(rec));
  const ClassTable t = vehicles();
  EXPECT_THROW(validate_interchange(rec, &t), ValidationError);
  EXPECT_THROW((void)serialize_interchange([] {
                 auto r = sample_record();
                 r.detections[0].box.x1 = 50;
                 return r;
               }()),
               ValidationError);
}

// --- export ------------------------------------------------------------------------

TEST(Export, EmptySetHasEmptyManifest) {
  TempDir dir("ex0");
  const auto manifest = export_pseudo_labels({}, dir.str(), "cfg-0");
  EXPECT_EQ(manifest["count"], 0);
  const PseudoLabelSet back = load_pseudo_labels(dir.str());
  EXPECT_TRUE(back.rasters.empty());
  EXPECT_EQ(back.config_fingerprint, "cfg-0");
}

TEST(Export, RoundTripAndFingerprint) {
  TempDir dir("ex");
  LabelRaster a(5, 3), b(4, 4);
  a.at(1, 1) = 3;
  b.at(0, 3) = 255;
  const std::string fp = PipelineConfig{}.fingerprint();
  export_pseudo_labels({{"b/1", b}, {"a", a}}, dir.str(), fp);
  const PseudoLabelSet back = load_pseudo_labels(dir.str());
  EXPECT_EQ(back.config_fingerprint, fp);
  ASSERT_EQ(back.rasters.size(), 2u);
  std::map<std::string, LabelRaster> got(back.rasters.begin(), back.rasters.end());
  EXPECT_EQ(got.at("a"), a);
  EXPECT_EQ(got.at("b/1"), b);
}

TEST(Export, TamperedPngIsRejected) {
  TempDir dir("ex_bad");
  LabelRaster a(5, 3);
  export_pseudo_labels({{"a", a}}, dir.str(), "cfg-x");
  a.at(0, 0) = 1;
  write_png_labels(dir.str(raster_file_name("a")), a);
  EXPECT_THROW((void)load_pseudo_labels(dir.str()), ValidationError);
}

// --- config file and cache --------------------------------------------------------

TEST(ConfigFile, ParsesKeyValues) {
  const auto kv = parse_key_values(
      "# thresholds\n[pipeline]\nnms_iou = 0.4\ntop_n=2  # trailing\nlabels_source = \"ground_truth\"\n\n", "c");
  ASSERT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"nms_iou", "0.4"}));
  EXPECT_EQ(kv[1].second, "2");
  EXPECT_EQ(kv[2].second, "ground_truth");
  EXPECT_THROW((void)parse_key_values("a = 1\na = 2\n", "c"), ValidationError);
  EXPECT_THROW((void)parse_key_values("just words\n", "c"), ValidationError);
}

TEST(Cache, KeysChangeWithEveryComponent) {
  const std::string k = ResultCache::key("img", "prompt", "cfg-1");
  EXPECT_EQ(k, ResultCache::key("img", "prompt", "cfg-1"));
  EXPECT_NE(k, ResultCache::key("img", "prompt", "cfg-2"));
  EXPECT_NE(k, ResultCache::key("img2", "prompt", "cfg-1"));
  EXPECT_NE(k, ResultCache::key("img", "prompt2", "cfg-1"));
  EXPECT_NE(ResultCache::key("ab", "c", "d"), ResultCache::key("a", "bc", "d"));
}

TEST(Cache, PutThenGet) {
  TempDir dir("cache");
  const ResultCache c(dir.str());
  const std::string k = ResultCache::key("img", "p", "cfg");
  EXPECT_FALSE(c.get(k).has_value());
  c.put(k, "payload");
  EXPECT_EQ(c.get(k), "payload");
  EXPECT_FALSE(c.get(ResultCache::key("img", "p", "cfg-other")).has_value());
}

// --- synthetic -------------------------------------------------------------------

TEST(Synthetic, DeterministicAndDisjoint) {
  SyntheticSpec spec;
  spec.images = 10;
  spec.seed = 77;
  const Dataset a = make_synthetic_dataset(spec), b = make_synthetic_dataset(spec);
  for (const auto& id : a.ids()) {
    EXPECT_EQ(a.ground_truth(id).raster, b.ground_truth(id).raster);
    const auto& inst = a.ground_truth(id).instances;
    EXPECT_GE(inst.size(), 2u);
    EXPECT_LE(inst.size(), 5u);
    for (std::size_t i = 0; i < inst.size(); ++i)
      for (std::size_t k = i + 1; k < inst.size(); ++k) EXPECT_EQ(inst[i].mask.count_and(inst[k].mask), 0u);
  }
}

}  // namespace
}  // namespace boxseg
