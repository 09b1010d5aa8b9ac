#include "marginalia/samples.hpp"

#include <algorithm>

#include "marginalia/errors.hpp"
#include "marginalia/random.hpp"

namespace marginalia {

std::string_view to_string(RoiLabel l) { return l == RoiLabel::marginalia ? "marginalia" : "non_marginalia"; }

RoiLabel roi_label_from_string(std::string_view s) {
  if (s == "marginalia") return RoiLabel::marginalia;
  if (s == "non_marginalia") return RoiLabel::non_marginalia;
  throw InputError("unknown ROI label '" + std::string(s) + "'");
}

int tile_count(int w, int h) {
  const int longer = std::max(w, h);
  const int shorter = std::min(w, h);
  return std::max<int>(1, static_cast<int>(round_half_up_div(longer, shorter)));
}

std::vector<BBox> tile_box(const BBox& box) {
  const int k = tile_count(box.w, box.h);
  std::vector<BBox> tiles;
  tiles.reserve(static_cast<std::size_t>(k));
  const bool horizontal = box.w >= box.h;
  const int side = horizontal ? box.w : box.h;
  const int step = side / k;
  for (int i = 0; i < k; ++i) {
    const int offset = i * step;
    const int len = (i == k - 1) ? side - offset : step;
    tiles.push_back(horizontal ? BBox{box.x + offset, box.y, len, box.h} : BBox{box.x, box.y + offset, box.w, len});
  }
  return tiles;
}

namespace {

void append_tiles(std::vector<RoiSample>& out, const std::string& page_id, const Raster& page, const BBox& box,
                  RoiLabel label, int roi_size) {
  const auto tiles = tile_box(box);
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    RoiSample s;
    s.page_id = page_id;
    s.label = label;
    s.source_box = box;
    s.tile_box = tiles[i];
    s.tile_index = static_cast<int>(i);
    s.image = resize(crop(page, tiles[i]), roi_size, roi_size);
    out.push_back(std::move(s));
  }
}

}  // namespace

std::vector<RoiSample> positive_rois(const std::string& page_id, const Raster& page, std::span<const BBox> gt,
                                     int roi_size) {
  std::vector<RoiSample> out;
  for (const BBox& b : gt) append_tiles(out, page_id, page, b, RoiLabel::marginalia, roi_size);
  return out;
}

NegativeRois negative_rois(const std::string& page_id, const Raster& page, std::span<const BBox> gt,
                           std::span<const BBox> proposals, std::size_t n, std::uint64_t seed, int roi_size) {
  std::vector<BBox> candidates;
  for (const BBox& p : proposals) {
    if (!p.fits(width_of(page), height_of(page))) continue;
    const bool clear = std::all_of(gt.begin(), gt.end(), [&](const BBox& g) { return intersection_area(p, g) == 0; });
    if (clear && std::find(candidates.begin(), candidates.end(), p) == candidates.end()) candidates.push_back(p);
  }

  NegativeRois out;
  // partial Fisher-Yates over candidate indices, then restore input order
  std::vector<std::size_t> idx(candidates.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const std::size_t take = std::min(n, candidates.size());
  CounterRng rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  }
  idx.resize(take);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i : idx) append_tiles(out.samples, page_id, page, candidates[i], RoiLabel::non_marginalia, roi_size);
  out.chosen = take;
  if (take < n) {
    out.shortfall = n - take;
    out.warnings.push_back("page '" + page_id + "': only " + std::to_string(take) + " of " + std::to_string(n) +
                           " negatives available");
  }
  for (const RoiSample& s : out.samples) {
    for (const BBox& g : gt) {
      if (iou(s.source_box, g) != 0.0) throw InvariantViolation("negative ROI overlaps ground truth");
    }
  }
  return out;
}

}  // namespace marginalia
