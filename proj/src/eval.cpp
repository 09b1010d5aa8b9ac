#include "marginalia/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "marginalia/errors.hpp"

namespace marginalia {

std::vector<MatchPair> match_detections(std::span<const BBox> preds, std::span<const BBox> gt, double iou_threshold) {
  std::vector<MatchPair> candidates;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double v = iou(preds[p], gt[g]);
      if (v > 0.0 && v >= iou_threshold) candidates.push_back({p, g, v});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.pred != b.pred) return a.pred < b.pred;
    return a.gt < b.gt;
  });
  std::vector<char> pred_used(preds.size(), 0), gt_used(gt.size(), 0);
  std::vector<MatchPair> out;
  for (const MatchPair& c : candidates) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = gt_used[c.gt] = 1;
    out.push_back(c);
  }
  return out;
}

MeanIou mean_iou(std::span<const PageEval> pages) {
  MeanIou m;
  std::size_t n_gt = 0, n_pred = 0, n_pairs = 0;
  double sum = 0.0;
  for (const PageEval& p : pages) {
    n_gt += p.n_gt;
    n_pred += p.n_pred;
    n_pairs += p.pairs.size();
    for (const MatchPair& pair : p.pairs) sum += pair.iou;
  }
  if (n_gt == 0) {
    m.diagnostic = "no ground-truth boxes: mean IoU undefined";
    return m;
  }
  const std::size_t unmatched = (n_gt - n_pairs) + (n_pred - n_pairs);
  m.penalized = sum / static_cast<double>(n_pairs + unmatched);
  if (n_pairs > 0) m.matched_only = sum / static_cast<double>(n_pairs);
  return m;
}

EvalReport evaluate(std::span<const PageTruth> truth, const std::map<std::string, std::vector<Detection>>& detections,
                    double iou_threshold) {
  EvalReport r;
  r.iou_threshold = iou_threshold;
  std::size_t n_gt = 0, n_pred = 0;
  for (const PageTruth& page : truth) {
    std::vector<BBox> preds;
    if (auto it = detections.find(page.page_id); it != detections.end()) {
      for (const Detection& d : it->second) preds.push_back(d.box);
    }
    PageEval pe;
    pe.page_id = page.page_id;
    pe.n_gt = page.boxes.size();
    pe.n_pred = preds.size();
    // a thresholded greedy matching is the overlap matching restricted
    // to pairs at or above the threshold
    pe.pairs = match_detections(preds, page.boxes, 0.0);
    pe.true_positives = static_cast<std::size_t>(
        std::count_if(pe.pairs.begin(), pe.pairs.end(), [&](const MatchPair& m) { return m.iou >= iou_threshold; }));
    r.true_positives += pe.true_positives;
    n_gt += pe.n_gt;
    n_pred += pe.n_pred;
    r.pages.push_back(std::move(pe));
  }
  r.false_positives = n_pred - r.true_positives;
  r.false_negatives = n_gt - r.true_positives;
  if (n_pred > 0) r.precision = static_cast<double>(r.true_positives) / static_cast<double>(n_pred);
  if (n_gt > 0) r.recall = static_cast<double>(r.true_positives) / static_cast<double>(n_gt);
  r.mean = mean_iou(r.pages);
  return r;
}

namespace {

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string opt_text(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << *v;
  return os.str();
}

}  // namespace

Json to_json(const EvalReport& report) {
  Json pages = Json::array();
  for (const PageEval& p : report.pages) {
    Json pairs = Json::array();
    for (const MatchPair& m : p.pairs) pairs.push_back({{"pred", m.pred}, {"gt", m.gt}, {"iou", m.iou}});
    pages.push_back({{"page_id", p.page_id},
                     {"n_pred", p.n_pred},
                     {"n_gt", p.n_gt},
                     {"true_positives", p.true_positives},
                     {"pairs", pairs}});
  }
  Json j{{"iou_threshold", report.iou_threshold},
         {"true_positives", report.true_positives},
         {"false_positives", report.false_positives},
         {"false_negatives", report.false_negatives},
         {"precision", opt_json(report.precision)},
         {"recall", opt_json(report.recall)},
         {"mean_iou_penalized", opt_json(report.mean.penalized)},
         {"mean_iou_matched_only", opt_json(report.mean.matched_only)},
         {"pages", pages}};
  if (report.mean.diagnostic) j["diagnostic"] = *report.mean.diagnostic;
  return j;
}

std::string format_report(const EvalReport& report) {
  std::size_t id_width = 7;
  for (const PageEval& p : report.pages) id_width = std::max(id_width, p.page_id.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(id_width)) << "page_id" << std::right << std::setw(7) << "gt"
     << std::setw(7) << "pred" << std::setw(7) << "tp" << std::setw(10) << "mean_iou" << '\n';
  for (const PageEval& p : report.pages) {
    std::optional<double> page_mean;
    if (!p.pairs.empty()) {
      double s = 0;
      for (const auto& m : p.pairs) s += m.iou;
      page_mean = s / static_cast<double>(p.pairs.size());
    }
    os << std::left << std::setw(static_cast<int>(id_width)) << p.page_id << std::right << std::setw(7) << p.n_gt
       << std::setw(7) << p.n_pred << std::setw(7) << p.true_positives << std::setw(10) << opt_text(page_mean) << '\n';
  }
  os << '\n'
     << "iou_threshold          " << report.iou_threshold << '\n'
     << "true_positives         " << report.true_positives << '\n'
     << "false_positives        " << report.false_positives << '\n'
     << "false_negatives        " << report.false_negatives << '\n'
     << "precision              " << opt_text(report.precision) << '\n'
     << "recall                 " << opt_text(report.recall) << '\n'
     << "mean_iou (penalized)   " << opt_text(report.mean.penalized) << '\n'
     << "mean_iou (matched)     " << opt_text(report.mean.matched_only) << '\n';
  if (report.mean.diagnostic) os << "note: " << *report.mean.diagnostic << '\n';
  return os.str();
}

DetectionImport import_detections(const std::filesystem::path& path, const std::map<std::string, PageFrame>& pages) {
  DetectionImport out;
  const JsonlDocument doc = read_jsonl(path);
  for (const JsonLine& line : doc.records) {
    auto reject = [&](const std::string& msg) { out.errors.push_back(line_context(path.string(), line.line_no, msg)); };
    try {
      const Json& j = line.value;
      if (!j.contains("page_id") || !j.contains("box")) {
        reject("missing page_id or box");
        continue;
      }
      Detection d;
      d.page_id = j.at("page_id").get<std::string>();
      d.box = box_from_json(j.at("box"));
      d.score = j.contains("score") ? j.at("score").get<double>() : 1.0;
      auto frame = pages.find(d.page_id);
      if (frame == pages.end()) {
        reject("unknown page_id '" + d.page_id + "'");
        continue;
      }
      if (!d.box.fits(frame->second.width, frame->second.height)) {
        reject("box outside page '" + d.page_id + "'");
        continue;
      }
      if (!(d.score >= 0.0 && d.score <= 1.0)) {
        reject("score outside [0, 1]");
        continue;
      }
      out.by_page[d.page_id].push_back(std::move(d));
    } catch (const InputError& e) {
      reject(e.what());
    } catch (const Json::exception& e) {
      reject(std::string("wrong field type: ") + e.what());
    }
  }
  return out;
}

void export_detections(const std::filesystem::path& path, std::span<const Detection> detections) {
  std::vector<Json> rows;
  rows.reserve(detections.size());
  for (const Detection& d : detections) {
    rows.push_back({{"page_id", d.page_id}, {"box", box_to_json(d.box)}, {"score", d.score}});
  }
  write_jsonl(path, rows);
}

void draw_box(RgbImage& image, const BBox& box, Rgb color, int stroke) {
  const int w = image.width();
  const int h = image.height();
  for (int y = std::max(0, box.y); y < std::min(h, box.bottom()); ++y) {
    for (int x = std::max(0, box.x); x < std::min(w, box.right()); ++x) {
      const bool border = x < box.x + stroke || x >= box.right() - stroke || y < box.y + stroke ||
                          y >= box.bottom() - stroke;
      if (!border) continue;
      for (std::size_t k = 0; k < 3; ++k) image.planes[k](y, x) = color[k];
    }
  }
}

RgbImage render_overlay(const Raster& page, std::span<const BBox> gt, std::span<const BBox> preds) {
  RgbImage out = to_rgb(page);
  for (const BBox& b : gt) draw_box(out, b, kGreen);
  for (const BBox& b : preds) draw_box(out, b, kRed);
  return out;
}

}  // namespace marginalia
