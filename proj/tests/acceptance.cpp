// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Budgets and tolerances are fixed here.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "boxseg/cli/cli.hpp"
#include "support.hpp"

#ifndef BOXSEG_UNIT_TESTS
#error "BOXSEG_UNIT_TESTS must name the unit test executable"
#endif

namespace boxseg {
namespace {

using Clock = std::chrono::steady_clock;
using testing::Gen;

constexpr double kPerfectOracleBudgetS = 10.0;
constexpr double kLadderBudgetS = 30.0;
constexpr double kSuiteBudgetS = 120.0;
constexpr double kHandCaseTol = 1e-12;
constexpr int kGeometryCases = 500;
constexpr int kRleCases = 1000;
constexpr int kNmsCases = 200;
constexpr int kApCases = 200;
constexpr std::uint64_t kSeed = 7;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

/// 50 images, 128x128, 5 classes, 2-5 disjoint objects.
Dataset standard_dataset() {
  SyntheticSpec spec;
  spec.seed = kSeed;
  return make_synthetic_dataset(spec);
}

/// Every class present in an image must survive label selection, so top_n
/// covers all 5 foreground classes.
PipelineConfig acceptance_config() {
  PipelineConfig cfg;
  cfg.top_n = 5;
  return cfg;
}

double pseudo_miou(const Dataset& ds, const OracleNoise& noise, const PipelineConfig& cfg,
                   std::vector<GenerationResult>* keep = nullptr) {
  const OracleBackend o(ds, noise);
  const auto ids = ds.ids();
  auto results = generate_all(ds, {o, o, o}, ids, cfg, 4);
  const double m = evaluate_generation(ds, results, cfg.fingerprint()).miou;
  if (keep != nullptr) *keep = std::move(results);
  return m;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// --- criteria -------------------------------------------------------------------

Outcome perfect_oracle() {
  const auto t0 = Clock::now();
  const Dataset ds = standard_dataset();
  const double m = pseudo_miou(ds, OracleNoise::preset("none", kSeed), acceptance_config());
  const double dt = seconds_since(t0);
  return {m == 1.0 && dt < kPerfectOracleBudgetS, fmt("mIoU=%.9g, %.2fs (budget %.0fs)", m, dt, kPerfectOracleBudgetS)};
}

Outcome part_reassembly() {
  const Dataset ds = standard_dataset();
  OracleNoise parts = OracleNoise::preset("none", kSeed);
  parts.part_split_prob = 1.0;
  const double m_all = pseudo_miou(ds, parts, acceptance_config());

  // Half the objects split: whole masks and parts both occur.
  OracleNoise mixed = parts;
  mixed.part_split_prob = 0.5;
  const PipelineConfig cfg = acceptance_config();
  std::vector<GenerationResult> results;
  const double m_mixed = pseudo_miou(ds, mixed, cfg, &results);
  std::size_t whole_boxes = 0, part_boxes = 0, violations = 0;
  for (const auto& r : results) {
    for (const auto& t : r.traces) {
      const bool has_whole = std::any_of(t.candidates.begin(), t.candidates.end(), [&](const CandidateRecord& c) {
        return c.rank >= 0 && c.coverage >= cfg.whole_coverage_min;
      });
      if (has_whole) {
        ++whole_boxes;
        if (t.chosen.size() != 1 || !t.whole_selected) ++violations;
      } else {
        ++part_boxes;
      }
    }
  }
  const bool pass = m_all == 1.0 && m_mixed == 1.0 && violations == 0 && whole_boxes > 0 && part_boxes > 0;
  return {pass, fmt("mIoU(split all)=%.9g, mIoU(split half)=%.9g, ", m_all, m_mixed) +
                    std::to_string(whole_boxes) + " whole-mask boxes, " + std::to_string(violations) +
                    " whole-over-part violations"};
}

Outcome ladder_ordering() {
  const auto t0 = Clock::now();
  const Dataset ds = standard_dataset();
  const OracleBackend o(ds, OracleNoise::preset("preset-mild", kSeed));
  const auto rows = ablation_report(ds, {o, o, o}, supervision_ladder(acceptance_config()), 4);
  const double dt = seconds_since(t0);
  const bool ordered = rows.size() == 3 && rows[0].pseudo_miou <= rows[1].pseudo_miou &&
                       rows[1].pseudo_miou <= rows[2].pseudo_miou;
  return {ordered && dt < kLadderBudgetS,
          fmt("pred/pred=%.4f <= gt/pred=%.4f <= gt/gt=%.4f", rows.at(0).pseudo_miou, rows.at(1).pseudo_miou,
              rows.at(2).pseudo_miou) +
              fmt(", %.2fs (budget %.0fs)", dt, kLadderBudgetS)};
}

Outcome geometry_oracles() {
  Gen g(101);
  int mismatches = 0;
  for (int i = 0; i < kGeometryCases; ++i) {
    const int w = g.in(1, 64), h = g.in(1, 64);
    const BitMask a = g.mask(w, h), b = g.mask(w, h);
    const Box p = g.box(w, h), q = g.box(w, h);
    mismatches += mask_iou(a, b) != testing::bf_mask_iou(a, b);
    mismatches += box_iou(p, q) != testing::bf_box_iou(p, q);
    mismatches += coverage(a, p) != testing::bf_coverage(a, p);
    if (!a.empty()) mismatches += containment(a, p) != testing::bf_containment(a, p);
    mismatches += !(clip_mask(a, p) == testing::bf_clip(a, p));
  }
  return {mismatches == 0, std::to_string(kGeometryCases) + " cases up to 64x64, " + std::to_string(mismatches) +
                               " mismatches"};
}

Outcome rle_roundtrip() {
  Gen g(202);
  int failures = 0;
  for (int i = 0; i < kRleCases; ++i) {
    const BitMask m = g.mask(g.in(1, 64), g.in(1, 64));
    const RleMask r = rle_encode(m);
    std::uint64_t sum = 0;
    for (auto c : r.counts) sum += c;
    failures += !(rle_decode(r) == m) || sum != m.size();
  }
  BitMask one(2, 2);
  one.set(0, 0);
  const bool fixed = rle_encode(BitMask(2, 2)).counts == std::vector<std::uint32_t>{4} &&
                     rle_encode(BitMask::from_box(2, 2, Box{0, 0, 2, 2})).counts == std::vector<std::uint32_t>{0, 4} &&
                     rle_encode(one).counts == std::vector<std::uint32_t>{0, 1, 3};
  return {failures == 0 && fixed, std::to_string(kRleCases) + " random masks, " + std::to_string(failures) +
                                      " failures; fixed examples " + (fixed ? "match" : "DIFFER")};
}

Outcome nms_reference() {
  Gen g(303);
  int mismatches = 0;
  auto canonical = [](std::vector<Detection> v) {
    std::stable_sort(v.begin(), v.end(), [](const Detection& a, const Detection& b) {
      if (detection_precedes(a, b)) return true;
      if (detection_precedes(b, a)) return false;
      return a.box.class_id < b.box.class_id;
    });
    return v;
  };
  for (int i = 0; i < kNmsCases; ++i) {
    std::vector<Detection> dets;
    for (int k = g.in(0, 8); k > 0; --k) {
      Box b = g.box(24, 24);
      b.class_id = g.in(1, 3);
      b.score = g.in(1, 5) / 5.0;
      dets.push_back(Detection{b, "x", 1.0, k});
    }
    const double thr = g.in(0, 10) / 10.0;
    mismatches += !(canonical(nms_per_class(dets, thr)) == canonical(testing::bf_nms(dets, thr)));
  }
  return {mismatches == 0, std::to_string(kNmsCases) + " random sets (n <= 8), " + std::to_string(mismatches) +
                               " mismatches"};
}

Outcome miou_hand_case() {
  const LabelRaster gt(4, 4, std::vector<std::uint8_t>{1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0});
  const LabelRaster pred(4, 4, std::vector<std::uint8_t>{1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0});
  const std::vector<LabelRaster> p{pred}, g{gt};
  const double m = miou(p, g, 2).miou;
  const bool hand = std::abs(m - 1.0 / 3.0) <= kHandCaseTol;

  Gen gen(404);
  int ignore_failures = 0;
  for (int i = 0; i < 100; ++i) {
    const int w = gen.in(1, 16), h = gen.in(1, 16);
    LabelRaster gr(w, h), p1(w, h), p2(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        gr.at(x, y) = gen.in(0, 4) == 0 ? 255 : static_cast<std::uint8_t>(gen.in(0, 3));
        p1.at(x, y) = static_cast<std::uint8_t>(gen.in(0, 3));
        p2.at(x, y) = gr.at(x, y) == 255 ? static_cast<std::uint8_t>(gen.in(0, 3)) : p1.at(x, y);
      }
    }
    const std::vector<LabelRaster> a{p1}, b{p2}, gg{gr};
    const EvalReport ra = miou(a, gg, 4), rb = miou(b, gg, 4);
    ignore_failures += !(ra.confusion == rb.confusion) || ra.miou != rb.miou;
  }
  return {hand && ignore_failures == 0,
          fmt("mIoU=%.17g (|err| %.3g, tol %.0e), ", m, std::abs(m - 1.0 / 3.0), kHandCaseTol) +
              std::to_string(ignore_failures) + " ignore-invariance failures"};
}

Outcome ap_reference() {
  Gen g(505);
  int mismatches = 0;
  for (int i = 0; i < kApCases; ++i) {
    std::vector<bool> hits;
    for (int k = g.in(0, 20); k > 0; --k) hits.push_back(g.in(0, 1) == 1);
    const std::size_t pos = static_cast<std::size_t>(std::count(hits.begin(), hits.end(), true)) + g.in(0, 3);
    mismatches += average_precision(hits, pos) != testing::bf_ap(hits, pos);
  }
  const double five_sixths = average_precision({true, false, true}, 2);
  const bool fixed = std::abs(five_sixths - 5.0 / 6.0) <= kHandCaseTol;
  return {mismatches == 0 && fixed, std::to_string(kApCases) + " random lists (n <= 20), " +
                                        std::to_string(mismatches) + " mismatches; [+,-,+] -> " +
                                        fmt("%.17g", five_sixths)};
}

Outcome determinism() {
  testing::TempDir dir("accept_det");
  SyntheticSpec spec;
  spec.images = 10;
  spec.seed = kSeed;
  write_voc_like(make_synthetic_dataset(spec), dir.str("data"));
  const std::string out = dir.str("out"), report = dir.str("report.json");
  const std::vector<std::string> gen_args{"boxseg", "generate", "--dataset", dir.str("data"), "--backend", "oracle",
                                          "--seed", "7", "--noise", "preset-mild", "--jobs", "4", "--out", out};
  const std::vector<std::string> eval_args{"boxseg", "evaluate", "--pred", out, "--gt", dir.str("data"),
                                           "--out", report};
  auto call = [](const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    return cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
  };
  auto snapshot = [&] {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(out)) files[e.path().filename()] = read_file(e.path());
    files["<report>"] = read_file(report);
    return files;
  };
  if (call(gen_args) != 0 || call(eval_args) != 0) return {false, "a run failed"};
  const auto first = snapshot();
  std::filesystem::remove_all(out);
  std::filesystem::remove(report);
  if (call(gen_args) != 0 || call(eval_args) != 0) return {false, "a run failed"};
  const auto second = snapshot();
  std::size_t pngs = 0;
  for (const auto& [name, bytes] : first) pngs += name.size() > 4 && name.substr(name.size() - 4) == ".png";
  return {first == second && pngs == 10, std::to_string(first.size()) + " files compared (" + std::to_string(pngs) +
                                             " PNGs, manifest, traces, report): " +
                                             (first == second ? "identical" : "DIFFERENT")};
}

Outcome suite_runtime(Clock::time_point started) {
  const auto t0 = Clock::now();
  const std::string cmd = std::string("\"") + BOXSEG_UNIT_TESTS + "\" --gtest_brief=1 > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  const double unit_s = seconds_since(t0);
  const double total = seconds_since(started);
  return {rc == 0 && total < kSuiteBudgetS,
          fmt("unit tests %.2fs + acceptance checks %.2fs = %.2fs", unit_s, total - unit_s, total) +
              fmt(" (budget %.0fs)", kSuiteBudgetS) + (rc == 0 ? "" : ", unit tests FAILED")};
}

}  // namespace
}  // namespace boxseg

int main() {
  using namespace boxseg;
  const auto started = Clock::now();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"perfect-oracle equivalence", perfect_oracle},
      {"part reassembly", part_reassembly},
      {"supervision ladder ordering", ladder_ordering},
      {"geometry vs brute force", geometry_oracles},
      {"RLE round trip", rle_roundtrip},
      {"NMS vs reference", nms_reference},
      {"mIoU hand case and ignore pixels", miou_hand_case},
      {"AP vs PR integration", ap_reference},
      {"byte-identical reruns", determinism},
      {"full suite runtime", [started] { return suite_runtime(started); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %-34s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
