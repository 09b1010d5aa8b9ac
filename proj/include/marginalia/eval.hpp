#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "marginalia/jsonl.hpp"
#include "marginalia/raster.hpp"

namespace marginalia {

struct Detection {
  std::string page_id;
  BBox box;
  double score = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct MatchPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double iou = 0.0;
};

/// Greedy one-to-one matching: candidate pairs with IoU >= threshold (and
/// > 0) are taken in order of descending IoU, ties by (pred, gt) index,
/// whenever both members are still free.
std::vector<MatchPair> match_detections(std::span<const BBox> preds, std::span<const BBox> gt,
                                        double iou_threshold);

struct PageEval {
  std::string page_id;
  std::vector<MatchPair> pairs;  // overlap matching (any IoU > 0)
  std::size_t n_pred = 0;
  std::size_t n_gt = 0;
  std::size_t true_positives = 0;  // pairs at or above the report threshold
};

struct MeanIou {
  std::optional<double> penalized;     // unmatched boxes count as 0
  std::optional<double> matched_only;  // mean over matched pairs
  std::optional<std::string> diagnostic;
};

/// Both mean-IoU modes over a set of evaluated pages. Undefined (empty)
/// when the corpus has no ground-truth boxes.
MeanIou mean_iou(std::span<const PageEval> pages);

struct EvalReport {
  double iou_threshold = 0.5;
  std::vector<PageEval> pages;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  MeanIou mean;
};

struct PageTruth {
  std::string page_id;
  std::vector<BBox> boxes;
};

/// Pages without detections count as having none.
EvalReport evaluate(std::span<const PageTruth> truth, const std::map<std::string, std::vector<Detection>>& detections,
                    double iou_threshold = 0.5);

Json to_json(const EvalReport& report);

/// Aligned-column text table, one row per page plus totals.
std::string format_report(const EvalReport& report);

/// Fraction of positions where the labels agree. Throws
/// std::invalid_argument for empty or unequal-length inputs.
template <typename T>
double classification_accuracy(std::span<const T> predicted, std::span<const T> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("classification_accuracy: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("classification_accuracy: empty label lists");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

struct PageFrame {
  int width = 0;
  int height = 0;
};

struct DetectionImport {
  std::map<std::string, std::vector<Detection>> by_page;
  std::vector<std::string> errors;  // "file:line: message" per rejected line
};

/// Line-delimited {page_id, box: [x, y, w, h], score}. Lines with an
/// unknown page, a box outside the page or a score outside [0, 1] are
/// rejected individually.
DetectionImport import_detections(const std::filesystem::path& path, const std::map<std::string, PageFrame>& pages);

void export_detections(const std::filesystem::path& path, std::span<const Detection> detections);

using Rgb = std::array<std::uint8_t, 3>;
inline constexpr Rgb kGreen{0, 255, 0};
inline constexpr Rgb kRed{255, 0, 0};

/// Recolor the `stroke`-pixel band just inside the box border.
void draw_box(RgbImage& image, const BBox& box, Rgb color, int stroke = 2);

/// Ground truth in green, then predictions in red on top.
RgbImage render_overlay(const Raster& page, std::span<const BBox> gt, std::span<const BBox> preds);

}  // namespace marginalia
