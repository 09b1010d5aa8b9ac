#include <doctest.h>

#include <random>
#include <set>

#include "marginalia/eval.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace marginalia;
using testing_support::TempDir;

namespace {

bool greedy_unique(const std::vector<BBox>& preds, const std::vector<BBox>& gt) {
  std::set<double> seen;
  for (const auto& p : preds) {
    for (const auto& g : gt) {
      const double v = iou(p, g);
      if (v > 0 && !seen.insert(v).second) return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("matching is one-to-one") {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 300; ++i) {
    std::vector<BBox> preds, gt;
    for (int k = 0; k < 6; ++k) preds.push_back(testing_support::random_box(rng, 30));
    for (int k = 0; k < 5; ++k) gt.push_back(testing_support::random_box(rng, 30));
    const auto pairs = match_detections(preds, gt, 0.3);
    std::set<std::size_t> ps, gs;
    for (const auto& m : pairs) {
      CHECK(ps.insert(m.pred).second);
      CHECK(gs.insert(m.gt).second);
      CHECK(m.iou >= 0.3);
      CHECK(m.iou == iou(preds[m.pred], gt[m.gt]));
    }
  }
}

TEST_CASE("greedy matching equals the exhaustive best when choices are unique") {
  std::mt19937_64 rng(62);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    std::vector<BBox> preds, gt;
    const int np = 1 + static_cast<int>(rng() % 4), ng = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < np; ++k) preds.push_back(testing_support::random_box(rng, 20));
    for (int k = 0; k < ng; ++k) gt.push_back(testing_support::random_box(rng, 20));
    if (!greedy_unique(preds, gt)) continue;
    for (double threshold : {0.0, 0.3, 0.5}) {
      auto pairs = match_detections(preds, gt, threshold);
      std::vector<double> got;
      for (const auto& m : pairs) got.push_back(m.iou);
      std::sort(got.rbegin(), got.rend());
      CHECK(got == oracle::best_matching_ious(preds, gt, threshold));
    }
    ++checked;
  }
  CHECK(checked > 1000);
}

TEST_CASE("greedy takes the higher IoU first") {
  // pred 0 overlaps both gts; gt 0 is its better match
  const std::vector<BBox> preds{{0, 0, 10, 10}, {0, 0, 10, 12}};
  const std::vector<BBox> gt{{0, 0, 10, 11}, {0, 5, 10, 10}};
  const auto pairs = match_detections(preds, gt, 0.0);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].pred == 1);
  CHECK(pairs[0].gt == 0);
}

TEST_CASE("penalized mean IoU counts unmatched boxes as zero") {
  const std::vector<PageTruth> truth{{"a", {{0, 0, 10, 10}, {50, 50, 10, 10}}}, {"b", {{0, 0, 10, 10}}}};
  std::map<std::string, std::vector<Detection>> det;
  det["a"] = {{"a", {5, 5, 10, 10}, 0.9}, {"a", {80, 80, 5, 5}, 0.5}};
  det["b"] = {{"b", {0, 0, 10, 10}, 1.0}};
  const EvalReport r = evaluate(truth, det, 0.5);
  // pairs: a (IoU 25/175), b (IoU 1); unmatched: one gt on a, one pred on a
  const double sum = 25.0 / 175.0 + 1.0;
  REQUIRE(r.mean.penalized);
  REQUIRE(r.mean.matched_only);
  CHECK(*r.mean.penalized == doctest::Approx(sum / 4).epsilon(1e-15));
  CHECK(*r.mean.matched_only == doctest::Approx(sum / 2).epsilon(1e-15));
  CHECK(*r.mean.matched_only >= *r.mean.penalized);
  CHECK(r.true_positives == 1);
  CHECK(r.false_positives == 2);
  CHECK(r.false_negatives == 2);
  CHECK(*r.precision == doctest::Approx(1.0 / 3));
  CHECK(*r.recall == doctest::Approx(1.0 / 3));
}

TEST_CASE("mean IoU of 25/175 on every pair") {
  std::vector<PageTruth> truth;
  std::map<std::string, std::vector<Detection>> det;
  for (int i = 0; i < 10; ++i) {
    const std::string id = "p" + std::to_string(i);
    truth.push_back({id, {{i, 2 * i, 10, 10}}});
    det[id] = {{id, {i + 5, 2 * i + 5, 10, 10}, 1.0}};
  }
  const EvalReport r = evaluate(truth, det, 0.5);
  CHECK(std::abs(*r.mean.penalized - 25.0 / 175.0) <= 1e-12);
  CHECK(r.true_positives == 0);
}

TEST_CASE("mean IoU is undefined without ground truth") {
  const std::vector<PageTruth> truth{{"a", {}}};
  std::map<std::string, std::vector<Detection>> det;
  det["a"] = {{"a", {0, 0, 3, 3}, 1.0}};
  const EvalReport r = evaluate(truth, det);
  CHECK_FALSE(r.mean.penalized);
  CHECK_FALSE(r.mean.matched_only);
  CHECK(r.mean.diagnostic);
  CHECK_FALSE(r.recall);
  CHECK(format_report(r).find("n/a") != std::string::npos);
}

TEST_CASE("report json and text") {
  const std::vector<PageTruth> truth{{"page_1", {{0, 0, 10, 10}}}};
  std::map<std::string, std::vector<Detection>> det;
  det["page_1"] = {{"page_1", {0, 0, 10, 10}, 1.0}};
  const EvalReport r = evaluate(truth, det);
  const Json j = to_json(r);
  CHECK(j.at("mean_iou_penalized") == 1.0);
  CHECK(j.at("pages").size() == 1);
  const std::string text = format_report(r);
  CHECK(text.find("page_1") != std::string::npos);
  CHECK(text.find("1.0000") != std::string::npos);
}

TEST_CASE("classification accuracy is one minus normalized Hamming distance") {
  std::mt19937_64 rng(63);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<int> a(n), b(n);
    std::size_t hamming = 0;
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = static_cast<int>(rng() % 2);
      b[k] = static_cast<int>(rng() % 2);
      hamming += a[k] != b[k];
    }
    const double acc = classification_accuracy<int>(a, b);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(acc == doctest::Approx(1.0 - static_cast<double>(hamming) / static_cast<double>(n)));
  }
  CHECK_THROWS_AS(classification_accuracy<int>(std::vector<int>{1}, std::vector<int>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(classification_accuracy<int>(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("detection import rejects bad lines individually") {
  TempDir dir("det");
  testing_support::spit(dir / "d.jsonl",
                        "{\"page_id\":\"a\",\"box\":[1,1,5,5],\"score\":0.5}\n"
                        "{\"page_id\":\"zz\",\"box\":[1,1,5,5],\"score\":0.5}\n"
                        "{\"page_id\":\"a\",\"box\":[8,8,5,5],\"score\":0.5}\n"
                        "{\"page_id\":\"a\",\"box\":[1,1,5,5],\"score\":1.5}\n"
                        "{\"page_id\":\"a\",\"box\":[1,1,0,5]}\n"
                        "{\"box\":[1,1,5,5]}\n"
                        "{\"page_id\":\"a\",\"box\":[2,2,3,3]}\n");
  const std::map<std::string, PageFrame> frames{{"a", {10, 10}}};
  const auto imp = import_detections(dir / "d.jsonl", frames);
  REQUIRE(imp.by_page.at("a").size() == 2);
  CHECK(imp.by_page.at("a")[1].score == 1.0);
  REQUIRE(imp.errors.size() == 5);
  CHECK(imp.errors[0].find("d.jsonl:2:") != std::string::npos);
  CHECK(imp.errors[4].find("d.jsonl:6:") != std::string::npos);
}

TEST_CASE("detection export round trips") {
  TempDir dir("det_rt");
  const std::vector<Detection> dets{{"a", {1, 2, 3, 4}, 0.25}, {"b", {0, 0, 9, 9}, 1.0}};
  export_detections(dir / "d.jsonl", dets);
  const auto imp = import_detections(dir / "d.jsonl", {{"a", {10, 10}}, {"b", {10, 10}}});
  CHECK(imp.errors.empty());
  CHECK(imp.by_page.at("a")[0] == dets[0]);
  CHECK(imp.by_page.at("b")[0] == dets[1]);
}

TEST_CASE("overlay draws ground truth green and predictions red") {
  const Raster page = Raster::Constant(20, 20, 128);
  const std::vector<BBox> gt{{2, 2, 10, 10}};
  const std::vector<BBox> pred{{8, 8, 10, 10}};
  const RgbImage img = render_overlay(page, gt, pred);
  auto px = [&](int y, int x) { return Rgb{img.planes[0](y, x), img.planes[1](y, x), img.planes[2](y, x)}; };
  CHECK(px(2, 5) == kGreen);
  CHECK(px(3, 5) == kGreen);
  CHECK(px(4, 5) == Rgb{128, 128, 128});
  CHECK(px(8, 9) == kRed);
  CHECK(px(17, 17) == kRed);
  CHECK(px(0, 0) == Rgb{128, 128, 128});
}

}
