// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver. Subcommands: generate, evaluate, ablate, inspect,
// validate-interchange. Every flag --foo-bar has a config-file key foo_bar;
// flags override the file.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 64 usage error.

#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "boxseg/backends/file_backend.hpp"
#include "boxseg/backends/oracle_backend.hpp"
#include "boxseg/dataio/cache.hpp"
#include "boxseg/dataio/config_file.hpp"
#include "boxseg/dataio/dataset_io.hpp"
#include "boxseg/dataio/export.hpp"
#include "boxseg/dataio/interchange.hpp"
#include "boxseg/dataio/synthetic.hpp"
#include "boxseg/eval/ablation.hpp"
#include "boxseg/eval/eval.hpp"
#include "boxseg/pipeline/pipeline.hpp"

namespace boxseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 64;

/// Usage problem detected after parsing (e.g. oracle backend without seed).
class UsageError : public Error {
 public:
  using Error::Error;
};

namespace detail {

using Settings = std::map<std::string, std::string>;

inline std::string flag_name(const std::string& key) {
  std::string out = "--" + key;
  for (char& c : out) {
    if (c == '_') c = '-';
  }
  return out;
}

// Keys grouped by the subcommands that take them.
inline const std::vector<std::string>& dataset_keys() {
  static const std::vector<std::string> k{"dataset", "format", "classes", "split"};
  return k;
}
inline const std::vector<std::string>& backend_keys() {
  static const std::vector<std::string> k{"backend",         "interchange_dir",  "seed",
                                          "noise",           "label_flip_prob",  "box_jitter_frac",
                                          "mask_morph_radius", "morph_random_sign", "part_split_prob"};
  return k;
}

inline std::string help_for(const std::string& key) {
  static const std::map<std::string, std::string> help{
      {"dataset", "dataset root directory"},
      {"format", "voc_like (default) or coco_like"},
      {"classes", "class table JSON (default: <dataset>/classes.json)"},
      {"split", "split name (default: train)"},
      {"backend", "oracle (default) or files"},
      {"interchange_dir", "directory of interchange records for --backend files"},
      {"seed", "oracle seed (required for --backend oracle)"},
      {"noise", "oracle noise preset: none, preset-mild, preset-parts"},
      {"label_flip_prob", "oracle: probability a present class is swapped for another"},
      {"box_jitter_frac", "oracle: box side jitter as a fraction of the side length"},
      {"mask_morph_radius", "oracle: dilate (>0) or erode (<0) masks by this many 4-steps"},
      {"morph_random_sign", "oracle: draw the morphology sign per object (true/false)"},
      {"part_split_prob", "oracle: probability an object is proposed as two halves"},
      {"top_n", "keep at most this many predicted classes (default 3)"},
      {"cls_score_min", "minimum classifier score (default 0.5)"},
      {"box_threshold", "minimum detector box score (default 0.35)"},
      {"text_threshold", "minimum detector text score (default 0.25)"},
      {"nms_iou", "per-class NMS IoU threshold (default 0.3)"},
      {"containment_min", "reject masks with less of their area inside the box (default 0.85)"},
      {"whole_coverage_min", "box coverage at which the best mask is taken alone (default 0.5)"},
      {"union_gain_min", "minimum new pixels per unioned part, as a fraction of box area (default 0.01)"},
      {"labels_source", "predicted or ground_truth"},
      {"boxes_source", "predicted or ground_truth"},
      {"ignore_boundary_band", "mark this many boundary pixels per region as ignore (default 0)"},
  };
  auto it = help.find(key);
  return it == help.end() ? key : it->second;
}

/// Binds --flag options for `keys` into `values`; only flags actually given
/// end up in the map.
class FlagSet {
 public:
  void add(CLI::App* app, const std::string& key, const std::string& help) {
    auto& slot = storage_[key];
    options_[key] = app->add_option(flag_name(key), slot, help);
  }
  void add_all(CLI::App* app, const std::vector<std::string>& keys) {
    for (const auto& k : keys) add(app, k, help_for(k));
  }
  [[nodiscard]] Settings given() const {
    Settings s;
    for (const auto& [k, opt] : options_) {
      if (opt->count() > 0) s[k] = storage_.at(k);
    }
    return s;
  }
  [[nodiscard]] bool knows(const std::string& key) const { return options_.count(key) > 0; }

 private:
  std::map<std::string, std::string> storage_;
  std::map<std::string, CLI::Option*> options_;
};

/// Config-file values overlaid with flags. Keys in the file that the
/// subcommand does not take are rejected.
inline Settings merge_settings(const FlagSet& flags, const Settings& given) {
  Settings out;
  if (auto it = given.find("config"); it != given.end()) {
    for (const auto& [k, v] : load_key_values(it->second)) {
      if (!flags.knows(k) || k == "config") {
        throw ValidationError(it->second + ": setting '" + k + "' does not apply to this command");
      }
      out[k] = v;
    }
  }
  for (const auto& [k, v] : given) out[k] = v;
  return out;
}

inline std::optional<std::string> get(const Settings& s, const std::string& key) {
  auto it = s.find(key);
  if (it == s.end()) return std::nullopt;
  return it->second;
}

inline std::string require(const Settings& s, const std::string& key) {
  auto v = get(s, key);
  if (!v || v->empty()) throw UsageError(flag_name(key) + " is required");
  return *v;
}

inline double to_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw UsageError(flag_name(key) + ": expected a number, got '" + v + "'");
  return out;
}

inline long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw UsageError(flag_name(key) + ": expected an integer, got '" + v + "'");
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError(flag_name(key) + ": expected true or false, got '" + v + "'");
}

inline PipelineConfig pipeline_config(const Settings& s) {
  PipelineConfig cfg;
  for (const auto& key : PipelineConfig::keys()) {
    if (auto v = get(s, key)) cfg.set(key, *v);
  }
  cfg.validate();
  return cfg;
}

inline int jobs(const Settings& s) {
  const auto j = get(s, "jobs");
  if (!j) return 1;
  const long long n = to_int("jobs", *j);
  if (n < 1 || n > 1024) throw UsageError("--jobs must be in 1..1024");
  return static_cast<int>(n);
}

inline std::unique_ptr<Dataset> load_dataset_from(const Settings& s, bool allow_synthetic) {
  const auto root = get(s, "dataset");
  if (!root || root->empty()) {
    if (!allow_synthetic) throw UsageError("--dataset is required");
    SyntheticSpec spec;
    if (auto seed = get(s, "seed")) spec.seed = static_cast<std::uint64_t>(to_int("seed", *seed));
    return std::make_unique<Dataset>(make_synthetic_dataset(spec));
  }
  const DatasetFormat format = parse_dataset_format(get(s, "format").value_or("voc_like"));
  std::optional<ClassTable> classes;
  if (auto c = get(s, "classes")) classes = ClassTable::load(*c);
  return std::make_unique<Dataset>(
      load_dataset(*root, format, classes ? &*classes : nullptr, get(s, "split").value_or("train")));
}

/// The chosen backend plus a stable description of it for cache keys.
struct BackendHandle {
  std::unique_ptr<OracleBackend> oracle;
  std::unique_ptr<FileBackend> files;
  std::string identity;

  [[nodiscard]] Backends view() const {
    if (oracle) return {*oracle, *oracle, *oracle};
    return {*files, *files, *files};
  }

  [[nodiscard]] std::string image_identity(const Dataset& ds, const std::string& id) const {
    if (files) return files->record(id).content_hash;
    const GroundTruth& gt = ds.ground_truth(id);
    std::string bytes(gt.raster.pixels().begin(), gt.raster.pixels().end());
    for (const auto& inst : gt.instances) {
      bytes += std::to_string(inst.class_id) + ":";
      for (auto c : rle_encode(inst.mask).counts) bytes += std::to_string(c) + ",";
      bytes += ";";
    }
    return sha256_hex(bytes);
  }
};

inline OracleNoise oracle_noise(const Settings& s) {
  const auto seed = get(s, "seed");
  if (!seed) throw UsageError("--seed is required for the oracle backend");
  OracleNoise n = OracleNoise::preset(get(s, "noise").value_or("none"),
                                      static_cast<std::uint64_t>(to_int("seed", *seed)));
  if (auto v = get(s, "label_flip_prob")) n.label_flip_prob = to_real("label_flip_prob", *v);
  if (auto v = get(s, "box_jitter_frac")) n.box_jitter_frac = to_real("box_jitter_frac", *v);
  if (auto v = get(s, "mask_morph_radius")) n.mask_morph_radius = static_cast<int>(to_int("mask_morph_radius", *v));
  if (auto v = get(s, "morph_random_sign")) n.morph_random_sign = to_bool("morph_random_sign", *v);
  if (auto v = get(s, "part_split_prob")) n.part_split_prob = to_real("part_split_prob", *v);
  n.validate();
  return n;
}

inline BackendHandle make_backend(const Settings& s, const Dataset& ds) {
  BackendHandle h;
  const std::string kind = get(s, "backend").value_or("oracle");
  if (kind == "oracle") {
    const OracleNoise n = oracle_noise(s);
    h.oracle = std::make_unique<OracleBackend>(ds, n);
    h.identity = "oracle seed=" + std::to_string(n.seed) + " flip=" + format_g9(n.label_flip_prob) +
                 " jitter=" + format_g9(n.box_jitter_frac) + " morph=" + std::to_string(n.mask_morph_radius) +
                 (n.morph_random_sign ? "+-" : "") + " split=" + format_g9(n.part_split_prob);
  } else if (kind == "files") {
    h.files = std::make_unique<FileBackend>(FileBackend::from_directory(require(s, "interchange_dir"), &ds.classes()));
    h.identity = "files";
  } else {
    throw UsageError("--backend must be oracle or files, got '" + kind + "'");
  }
  return h;
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

inline std::vector<std::uint8_t> from_hex(const std::string& s) {
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw ValidationError("corrupt cache entry");
  };
  if (s.size() % 2 != 0) throw ValidationError("corrupt cache entry");
  std::vector<std::uint8_t> out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(nib(s[2 * i]) << 4 | nib(s[2 * i + 1]));
  return out;
}

/// Cached per-image output: the raster and the trace document.
struct CachedImage {
  LabelRaster raster;
  nlohmann::json traces;
};

inline std::vector<CachedImage> run_generation(const Dataset& ds, const BackendHandle& backend,
                                               const PipelineConfig& cfg, int n_jobs,
                                               const std::optional<std::string>& cache_dir) {
  const std::vector<std::string> ids = ds.ids();
  std::vector<std::optional<CachedImage>> out(ids.size());
  std::vector<std::string> keys(ids.size());
  std::vector<std::string> todo;
  std::vector<std::size_t> todo_index;
  std::optional<ResultCache> cache;
  if (cache_dir) cache.emplace(*cache_dir);
  std::string prompt;
  for (const auto& n : ds.classes().names()) prompt += n + ".";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (cache) {
      keys[i] = ResultCache::key(backend.image_identity(ds, ids[i]), prompt, cfg.fingerprint() + "|" + backend.identity);
      if (auto hit = cache->get(keys[i])) {
        const auto j = nlohmann::json::parse(*hit);
        out[i] = CachedImage{LabelRaster(j.at("width").get<int>(), j.at("height").get<int>(),
                                         from_hex(j.at("pixels").get<std::string>())),
                             j.at("traces")};
        continue;
      }
    }
    todo.push_back(ids[i]);
    todo_index.push_back(i);
  }
  auto results = generate_all(ds, backend.view(), todo, cfg, n_jobs);
  for (std::size_t k = 0; k < results.size(); ++k) {
    const std::size_t i = todo_index[k];
    CachedImage img{std::move(results[k].raster), results[k].traces_json()};
    if (cache) {
      const nlohmann::json entry{{"width", img.raster.width()},
                                 {"height", img.raster.height()},
                                 {"pixels", to_hex(img.raster.pixels())},
                                 {"traces", img.traces}};
      cache->put(keys[i], entry.dump());
    }
    out[i] = std::move(img);
  }
  std::vector<CachedImage> flat;
  flat.reserve(out.size());
  for (auto& o : out) flat.push_back(std::move(*o));
  return flat;
}

inline void emit(const Settings& s, std::ostream& out, const std::string& text) {
  if (auto path = get(s, "out")) {
    write_file_atomic(*path, text);
  } else {
    out << text;
  }
}

// --- subcommands -----------------------------------------------------------

inline int cmd_generate(const Settings& s, std::ostream& out) {
  const std::string out_dir = require(s, "out");
  const PipelineConfig cfg = pipeline_config(s);
  const int n_jobs = jobs(s);
  const auto ds = load_dataset_from(s, false);
  const BackendHandle backend = make_backend(s, *ds);
  auto images = run_generation(*ds, backend, cfg, n_jobs, get(s, "cache_dir"));
  const std::vector<std::string> ids = ds->ids();
  std::vector<NamedRaster> rasters;
  nlohmann::json traces = nlohmann::json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    traces.push_back(images[i].traces);
    rasters.emplace_back(ids[i], std::move(images[i].raster));
  }
  const auto manifest = export_pseudo_labels(std::move(rasters), out_dir, cfg.fingerprint());
  write_file_atomic((std::filesystem::path(out_dir) / "traces.json").string(),
                    nlohmann::json{{"config_fingerprint", cfg.fingerprint()}, {"images", traces}}.dump(1) + "\n");
  out << "wrote " << manifest["count"].get<std::size_t>() << " pseudo-labels to " << out_dir << " ("
      << cfg.fingerprint() << ")\n";
  return kExitOk;
}

inline int cmd_evaluate(const Settings& s, std::ostream& out) {
  const std::string pred_dir = require(s, "pred");
  Settings ds_settings = s;
  ds_settings["dataset"] = require(s, "gt");
  const auto ds = load_dataset_from(ds_settings, false);
  const PseudoLabelSet preds = load_pseudo_labels(pred_dir);

  ConfusionAccumulator acc(ds->classes().size());
  std::set<std::string> seen;
  for (const auto& [id, raster] : preds.rasters) {
    acc.add(raster, ds->ground_truth(id).raster);
    seen.insert(id);
  }
  for (const auto& id : ds->ids()) {
    if (!seen.count(id)) throw ValidationError("no prediction for ground-truth image '" + id + "'");
  }
  EvalReport report = acc.report();
  report.config_fingerprint = preds.config_fingerprint;

  if (get(s, "backend")) {
    const BackendHandle backend = make_backend(s, *ds);
    const Backends b = backend.view();
    const double iou_match = to_real("iou_match", get(s, "iou_match").value_or("0.5"));
    std::vector<ImageScore> scores;
    std::map<std::string, std::set<int>> gt_labels;
    std::vector<ImageBox> dets, gts;
    std::vector<int> all_classes;
    for (int c = 1; c < ds->classes().size(); ++c) all_classes.push_back(c);
    const auto names = ds->classes().names();
    for (const auto& id : ds->ids()) {
      const GroundTruth& gt = ds->ground_truth(id);
      const auto labels = gt.labels();
      gt_labels[id] = std::set<int>(labels.begin(), labels.end());
      for (const auto& p : b.classifier.classify(id, names)) scores.push_back({id, p.class_id, p.score});
      for (const auto& d : b.detector.detect(id, all_classes, 0.0, 0.0)) dets.push_back({id, d.box});
      for (const auto& inst : gt.instances) gts.push_back({id, inst.box});
    }
    report.classification = ap_classification(scores, gt_labels);
    report.detection = ap_detection(dets, gts, iou_match);
  }

  if (auto path = get(s, "out")) {
    write_file_atomic(*path, report.to_canonical_json());
    out << report.table(&ds->classes());
  } else {
    out << report.to_canonical_json();
  }
  return kExitOk;
}

inline int cmd_ablate(const Settings& s, std::ostream& out) {
  const PipelineConfig base = pipeline_config(s);
  const int n_jobs = jobs(s);
  const auto ds = load_dataset_from(s, true);
  const BackendHandle backend = make_backend(s, *ds);
  const auto cfgs = supervision_ladder(base);
  const auto rows = ablation_report(*ds, backend.view(), cfgs, n_jobs);
  out << ablation_table(rows);
  if (auto path = get(s, "out")) write_file_atomic(*path, ablation_json(rows).dump(2) + "\n");
  return kExitOk;
}

inline int cmd_inspect(const Settings& s, std::ostream& out) {
  const std::string image = require(s, "image");
  const PipelineConfig cfg = pipeline_config(s);
  const auto ds = load_dataset_from(s, false);
  const BackendHandle backend = make_backend(s, *ds);
  const GenerationResult r = generate(*ds, backend.view(), image, cfg);
  emit(s, out, r.traces_json().dump(2) + "\n");
  return kExitOk;
}

inline int cmd_validate(const Settings& s, const std::vector<std::string>& files, std::ostream& out) {
  std::vector<std::string> paths = files;
  if (auto dir = get(s, "interchange_dir")) {
    if (!std::filesystem::is_directory(*dir)) throw IoError("interchange directory " + *dir + " does not exist");
    std::vector<std::string> found;
    for (const auto& e : std::filesystem::directory_iterator(*dir)) {
      if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path().string());
    }
    std::sort(found.begin(), found.end());
    paths.insert(paths.end(), found.begin(), found.end());
  }
  if (paths.empty()) throw UsageError("give interchange files or --interchange-dir");
  std::optional<ClassTable> classes;
  if (auto c = get(s, "classes")) classes = ClassTable::load(*c);
  int status = kExitOk;
  std::size_t ok = 0;
  for (const auto& p : paths) {
    try {
      read_interchange(p, classes ? &*classes : nullptr);
      out << "OK   " << p << "\n";
      ++ok;
    } catch (const IoError& e) {
      out << "FAIL " << e.what() << "\n";
      status = std::max(status, kExitIo);
    } catch (const ValidationError& e) {
      out << "FAIL " << e.what() << "\n";
      if (status == kExitOk) status = kExitValidation;
    }
  }
  out << ok << "/" << paths.size() << " records valid\n";
  return status;
}

}  // namespace detail

/// Entry point. Output goes to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"boxseg: box-constrained pseudo-label generation and evaluation"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Expand all help");

  const std::vector<std::string>& pipeline_keys = PipelineConfig::keys();

  FlagSet gen_flags, eval_flags, ablate_flags, inspect_flags, validate_flags;
  auto* gen = app.add_subcommand("generate", "Generate pseudo-label PNGs, manifest and traces");
  gen_flags.add_all(gen, dataset_keys());
  gen_flags.add_all(gen, backend_keys());
  gen_flags.add_all(gen, pipeline_keys);
  gen_flags.add(gen, "config", "TOML-style key = value settings file");
  gen_flags.add(gen, "jobs", "worker threads");
  gen_flags.add(gen, "out", "output directory");
  gen_flags.add(gen, "cache_dir", "result cache directory");

  auto* ev = app.add_subcommand("evaluate", "Score pseudo-labels against ground truth (mIoU, optional AP)");
  eval_flags.add(ev, "pred", "directory written by generate");
  eval_flags.add(ev, "gt", "ground-truth dataset root");
  eval_flags.add(ev, "format", "voc_like or coco_like");
  eval_flags.add(ev, "classes", "class table JSON");
  eval_flags.add(ev, "split", "split name");
  eval_flags.add_all(ev, backend_keys());
  eval_flags.add(ev, "iou_match", "IoU for a detection to match ground truth (default 0.5)");
  eval_flags.add(ev, "config", "settings file");
  eval_flags.add(ev, "out", "report JSON path (default: stdout)");

  auto* ab = app.add_subcommand("ablate", "Supervision-substitution table (predicted vs ground-truth labels/boxes)");
  ablate_flags.add_all(ab, dataset_keys());
  ablate_flags.add_all(ab, backend_keys());
  ablate_flags.add_all(ab, pipeline_keys);
  ablate_flags.add(ab, "config", "settings file");
  ablate_flags.add(ab, "jobs", "worker threads");
  ablate_flags.add(ab, "out", "JSON output path");

  auto* in = app.add_subcommand("inspect", "Dump the selection traces of one image");
  inspect_flags.add_all(in, dataset_keys());
  inspect_flags.add_all(in, backend_keys());
  inspect_flags.add_all(in, pipeline_keys);
  inspect_flags.add(in, "image", "image id");
  inspect_flags.add(in, "config", "settings file");
  inspect_flags.add(in, "out", "output path (default: stdout)");

  auto* va = app.add_subcommand("validate-interchange", "Check interchange files against schema v1");
  std::vector<std::string> files;
  va->add_option("files", files, "interchange JSON files");
  validate_flags.add(va, "interchange_dir", "directory of interchange files");
  validate_flags.add(va, "classes", "class table JSON to check class ids against");
  validate_flags.add(va, "config", "settings file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(merge_settings(gen_flags, gen_flags.given()), out);
    if (ev->parsed()) return cmd_evaluate(merge_settings(eval_flags, eval_flags.given()), out);
    if (ab->parsed()) return cmd_ablate(merge_settings(ablate_flags, ablate_flags.given()), out);
    if (in->parsed()) return cmd_inspect(merge_settings(inspect_flags, inspect_flags.given()), out);
    if (va->parsed()) return cmd_validate(merge_settings(validate_flags, validate_flags.given()), files, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace boxseg::cli
