#include "marginalia/raster.hpp"

#include <algorithm>

namespace marginalia {

namespace {

int scale_coord(int v, int src, int dst) {
  return static_cast<int>(round_half_up_div(std::int64_t{v} * dst, src));
}

}  // namespace

BBox scale_box(const BBox& box, int src_w, int src_h, int dst_w, int dst_h) {
  int x0 = std::clamp(scale_coord(box.x, src_w, dst_w), 0, dst_w);
  int y0 = std::clamp(scale_coord(box.y, src_h, dst_h), 0, dst_h);
  int x1 = std::clamp(scale_coord(box.right(), src_w, dst_w), 0, dst_w);
  int y1 = std::clamp(scale_coord(box.bottom(), src_h, dst_h), 0, dst_h);
  // degenerate boxes grow by one pixel, inward when at the far edge
  if (x1 <= x0) {
    if (x0 >= dst_w) x0 = dst_w - 1;
    x1 = x0 + 1;
  }
  if (y1 <= y0) {
    if (y0 >= dst_h) y0 = dst_h - 1;
    y1 = y0 + 1;
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

std::pair<Raster, std::vector<BBox>> rescale_page(const Raster& page, std::span<const BBox> boxes,
                                                  int target_w, int target_h) {
  const int w = width_of(page);
  const int h = height_of(page);
  std::vector<BBox> scaled;
  scaled.reserve(boxes.size());
  for (const BBox& b : boxes) scaled.push_back(scale_box(b, w, h, target_w, target_h));
  return {resize(page, target_w, target_h), std::move(scaled)};
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // 299/587/114 per mille, integer so results are platform-stable
  const int y = 299 * r + 587 * g + 114 * b;
  return static_cast<std::uint8_t>((y + 500) / 1000);
}

RgbImage to_rgb(const Raster& gray) { return RgbImage{{gray, gray, gray}}; }

}  // namespace marginalia
