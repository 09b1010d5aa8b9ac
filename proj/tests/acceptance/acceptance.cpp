// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "../oracles.hpp"
#include "../test_support.hpp"
#include "marginalia/dataset.hpp"
#include "marginalia/eval.hpp"
#include "marginalia/jsonl.hpp"
#include "marginalia/mser.hpp"
#include "marginalia/pipeline.hpp"
#include "marginalia/random.hpp"
#include "marginalia/recognizer.hpp"
#include "marginalia/samples.hpp"
#include "marginalia/segment.hpp"
#include "marginalia/synthetic.hpp"

using namespace marginalia;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects the first failure message; later checks still run.
class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      detail_ = what;
    }
  }
  Outcome done(std::string summary) const { return {pass_, pass_ ? std::move(summary) : detail_}; }

 private:
  bool pass_ = true;
  std::string detail_;
};

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Outcome augmentation_count() {
  Check c;
  TempDir dir("acc_aug");
  const auto start = std::chrono::steady_clock::now();
  write_synthetic_corpus(dir / "corpus", 513, 200, 286, 513);
  PipelineConfig cfg;
  cfg.corpus_dir = (dir / "corpus").string();
  cfg.work_dir = (dir / "work").string();
  cfg.rescale_width = 200;
  cfg.rescale_height = 286;
  cfg.jobs = jobs();
  run_ingest(cfg);
  run_split(cfg);
  const auto aug = run_augment(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto split = read_manifest(dir / "work" / files::kSplit).split();
  c.require(split && split->train.size() == 462, "train split is not 462 pages");
  c.require(aug.records == 1848, "augmented sample count " + std::to_string(aug.records) + " != 1848");
  const auto doc = read_jsonl(dir / "work" / files::kAugmented);
  c.require(doc.records.size() == 1848, "augmented manifest does not hold 1848 records");
  c.require(secs < 60.0, "took " + std::to_string(secs) + " s");
  char buf[96];
  std::snprintf(buf, sizeof buf, "513 pages -> 462 train -> 1848 samples in %.1f s", secs);
  return c.done(buf);
}

Outcome iou_oracle() {
  Check c;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const BBox a = testing_support::random_box(rng, 64);
    const BBox b = testing_support::random_box(rng, 64);
    const auto o = oracle::pixel_overlap(a, b, 64);
    c.require(intersection_area(a, b) == o.inter, "intersection differs from pixel count");
    c.require(iou(a, b) == static_cast<double>(o.inter) / static_cast<double>(o.uni), "iou differs from pixel count");
  }
  std::vector<PageTruth> truth;
  std::map<std::string, std::vector<Detection>> det;
  for (int i = 0; i < 25; ++i) {
    const std::string id = "page_" + std::to_string(i);
    const int x = 3 * i, y = 2 * i;
    truth.push_back({id, {{x, y, 10, 10}}});
    det[id] = {{id, {x + 5, y + 5, 10, 10}, 1.0}};
    c.require(iou(truth.back().boxes[0], det[id][0].box) == 25.0 / 175.0, "fixture pair is not 25/175");
  }
  const EvalReport r = evaluate(truth, det, 0.5);
  c.require(r.mean.penalized.has_value(), "penalized mean missing");
  const double err = r.mean.penalized ? std::abs(*r.mean.penalized - 25.0 / 175.0) : 1.0;
  c.require(err <= 1e-12, "penalized mean off by " + std::to_string(err));
  char buf[96];
  std::snprintf(buf, sizeof buf, "1000 pairs exact; penalized mean IoU error %.1e", err);
  return c.done(buf);
}

Outcome mser_oracle() {
  Check c;
  std::vector<Raster> fixtures;
  Raster square = Raster::Constant(32, 32, 235);
  square.block(9, 7, 10, 10).setConstant(40);
  fixtures.push_back(square);
  Raster nested = Raster::Constant(32, 32, 230);
  nested.block(4, 4, 24, 24).setConstant(150);
  nested.block(10, 10, 12, 12).setConstant(60);
  fixtures.push_back(nested);
  Raster blobs = Raster::Constant(32, 32, 240);
  blobs.block(2, 2, 6, 6).setConstant(20);
  blobs.block(3, 20, 9, 7).setConstant(90);
  blobs.block(18, 5, 10, 12).setConstant(140);
  blobs.block(20, 22, 8, 8).setConstant(60);
  blobs.block(22, 24, 3, 3).setConstant(10);
  fixtures.push_back(blobs);

  std::size_t regions = 0;
  for (const Raster& img : fixtures) {
    for (Polarity pol : {Polarity::dark, Polarity::bright}) {
      for (int delta : {1, 3}) {
        MserParams p;
        p.polarity = pol;
        p.delta = delta;
        p.min_area = 4;
        const auto got = extract_mser(img, p);
        const auto want = oracle::mser(img, p);
        c.require(got.size() == want.size(), "region count differs from oracle");
        for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
          c.require(oracle::run_pixels(got[i].pixels, 32) == want[i].pixels, "pixel set differs");
          c.require(got[i].area_at_threshold == want[i].area, "areas per threshold differ");
          c.require(got[i].stability == want[i].stability, "stability differs");
        }
        regions += got.size();
      }
    }
  }
  const auto single = extract_mser(square, MserParams{});
  c.require(single.size() == 1, "solid square gave " + std::to_string(single.size()) + " regions");
  if (single.size() == 1) {
    c.require(single[0].stability == 0.0, "solid square variation is not 0");
    c.require(single[0].bbox == BBox{7, 9, 10, 10}, "solid square bbox is not tight");
  }
  return c.done(std::to_string(regions) + " regions match the flood-fill oracle; solid square v = 0");
}

Outcome segmentation() {
  Check c;
  InkLineSpec s;
  s.letters_per_word = {4, 5, 3};
  s.height = 8;
  s.ink = 30;
  for (int k = 1; k <= 6; ++k) {
    Raster img = Raster::Constant(6 + k * 16, ink_line_width(s) + 8, 230);
    for (int i = 0; i < k; ++i) draw_ink_line(img, 4, 4 + i * 16, s);
    const auto lines = split_lines(img).lines.size();
    c.require(lines == static_cast<std::size_t>(k), std::to_string(k) + " bands gave " + std::to_string(lines));
  }
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    std::vector<int> row(1 + rng() % 80);
    const auto density = static_cast<double>(20 + rng() % 60) / 100.0;
    for (auto& v : row) v = static_cast<double>(rng() % 1000) / 1000.0 < density ? 1 : 0;
    c.require(word_spans(row) == oracle::word_spans(row), "word cuts differ from the gap oracle");
  }
  Raster merged = Raster::Constant(40, 120, 230);
  InkLineSpec tall = s;
  tall.letters_per_word = {3, 4, 3};
  tall.height = 14;
  draw_ink_line(merged, 0, 5, tall);
  draw_ink_line(merged, 48, 14, tall);
  c.require(split_lines(merged).lines.size() == 1, "overlapping rows did not merge into one line");
  return c.done("k = 1..6 bands exact; 500 rows match; overlapping lines merge");
}

Outcome sample_factory() {
  Check c;
  const std::pair<int, int> ratios[] = {{10, 10}, {14, 10}, {15, 10}, {16, 10}, {24, 10}, {25, 10}, {10, 25},
                                        {30, 10}, {34, 10}, {35, 10}, {100, 10}, {104, 10}, {105, 10}, {1, 1},
                                        {3, 2},   {5, 4},   {7, 3},   {8, 3},   {10, 40}, {227, 100}};
  for (const auto& [w, h] : ratios) {
    const double r = static_cast<double>(std::max(w, h)) / std::min(w, h);
    const int k = std::max(1, static_cast<int>(std::floor(r + 0.5)));
    c.require(tile_count(w, h) == k && tile_box({0, 0, w, h}).size() == static_cast<std::size_t>(k),
              "tile count wrong for " + std::to_string(w) + "x" + std::to_string(h));
  }
  std::size_t rois = 0, negatives = 0;
  for (int i = 0; i < 20; ++i) {
    const auto page = synthesize_page("page_" + std::to_string(i), 350, 500, 7);
    const auto& gt = page.annotation.marginalia;
    std::vector<BBox> boxes;
    for (const auto& p : proposals(page.image, {})) boxes.push_back(p.box);
    const auto pos = positive_rois("p", page.image, gt);
    const auto neg = negative_rois("p", page.image, gt, boxes, 4, derive_seed(7, std::to_string(i)));
    for (const std::vector<RoiSample>* set : {&pos, &neg.samples}) {
      for (const auto& roi : *set) {
        c.require(roi.image.rows() == 227 && roi.image.cols() == 227, "ROI is not 227x227");
        ++rois;
      }
    }
    for (const auto& roi : neg.samples) {
      for (const auto& g : gt) c.require(iou(roi.source_box, g) == 0.0, "negative overlaps ground truth");
    }
    negatives += neg.samples.size();
  }
  c.require(negatives > 0, "no negatives were drawn");
  return c.done("20 ratios; " + std::to_string(rois) + " ROIs 227x227; " + std::to_string(negatives) +
                " negatives with IoU 0");
}

Outcome binarization() {
  Check c;
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const Raster img = testing_support::random_raster(rng, 16, 16);
    c.require(otsu_threshold(img) == oracle::otsu(img), "otsu differs from exhaustive maximizer");
  }
  return c.done("100 random 16x16 fixtures match");
}

Outcome edit_distance_cer() {
  Check c;
  std::vector<std::string> words{""};
  for (std::size_t start = 0; start < words.size(); ++start) {
    if (words[start].size() == 6) continue;
    for (char ch : std::string("abc")) words.push_back(words[start] + ch);
  }
  std::size_t pairs = 0;
  for (const auto& ref : words) {
    std::vector<RecognitionResult> results;
    std::map<std::string, std::string> truth;
    std::size_t total = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
      const std::size_t d = edit_distance(words[i], ref);
      const std::size_t want = oracle::levenshtein(decode_utf8(words[i]), decode_utf8(ref));
      c.require(d == want, "distance('" + words[i] + "', '" + ref + "') differs");
      total += want;
      const std::string id = std::to_string(i);
      results.push_back({id, words[i], 1.0});
      truth[id] = ref;
      ++pairs;
    }
    if (ref.empty()) continue;
    const WordScore score = word_accuracy(results, truth);
    const double want_cer = static_cast<double>(total) / static_cast<double>(words.size() * ref.size());
    c.require(score.cer && *score.cer == want_cer, "CER differs for reference '" + ref + "'");
  }
  return c.done(std::to_string(pairs) + " pairs up to length 6 over {a,b,c}");
}

Outcome determinism() {
  Check c;
  TempDir a("acc_det_a"), b("acc_det_b");
  std::vector<std::map<std::string, std::string>> snaps;
  int run = 0;
  for (const TempDir* dir : {&a, &b}) {
    PipelineConfig cfg;
    cfg.corpus_dir = MARGINALIA_MINI_CORPUS;
    cfg.work_dir = (*dir / "work").string();
    cfg.jobs = run++ == 0 ? 1 : jobs();
    run_ingest(cfg);
    run_split(cfg);
    run_augment(cfg);
    run_proposals(cfg);
    run_samples(cfg);
    run_segment(cfg, std::nullopt);
    run_recognize_mock(cfg, default_lexicon());
    std::map<std::string, std::string> snap;
    for (const auto& e : fs::recursive_directory_iterator(cfg.work_dir)) {
      if (e.is_regular_file()) snap[fs::relative(e.path(), cfg.work_dir).string()] = testing_support::slurp(e.path());
    }
    snaps.push_back(std::move(snap));
  }
  std::size_t manifests = 0;
  for (const auto& [name, bytes] : snaps[0]) {
    auto it = snaps[1].find(name);
    c.require(it != snaps[1].end() && it->second == bytes, name + " differs between runs");
    manifests += name.ends_with(".jsonl");
  }
  c.require(snaps[0].size() == snaps[1].size(), "file sets differ");
  return c.done(std::to_string(manifests) + " manifests and " + std::to_string(snaps[0].size() - manifests) +
                " images byte-identical");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"augmentation count", augmentation_count},
      {"IoU oracle equivalence", iou_oracle},
      {"MSER correctness", mser_oracle},
      {"segmentation correctness", segmentation},
      {"sample-factory contract", sample_factory},
      {"binarization", binarization},
      {"edit distance / CER", edit_distance_cer},
      {"end-to-end determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
