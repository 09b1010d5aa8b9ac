#pragma once

#include <cstdint>
#include <iosfwd>

namespace marginalia {

/// Axis-aligned pixel rectangle, top-left anchored. Covers columns
/// [x, x+w) and rows [y, y+h).
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  constexpr int right() const { return x + w; }
  constexpr int bottom() const { return y + h; }
  constexpr std::int64_t area() const { return std::int64_t{w} * h; }
  constexpr bool valid() const { return x >= 0 && y >= 0 && w > 0 && h > 0; }
  constexpr bool fits(int width, int height) const {
    return valid() && right() <= width && bottom() <= height;
  }

  friend constexpr bool operator==(const BBox&, const BBox&) = default;
};

std::ostream& operator<<(std::ostream& os, const BBox& b);

/// Pixel count shared by both boxes.
std::int64_t intersection_area(const BBox& a, const BBox& b);

/// Intersection over union on integer pixel areas.
double iou(const BBox& a, const BBox& b);

/// Smallest box covering both.
BBox bounding_union(const BBox& a, const BBox& b);

/// floor(num / den + 1/2) for den > 0, exact in integers.
constexpr std::int64_t round_half_up_div(std::int64_t num, std::int64_t den) {
  std::int64_t n = 2 * num + den;
  std::int64_t d = 2 * den;
  std::int64_t q = n / d;
  if ((n % d != 0) && ((n < 0) != (d < 0))) --q;
  return q;
}

}  // namespace marginalia
