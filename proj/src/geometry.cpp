#include "marginalia/geometry.hpp"

#include <algorithm>
#include <ostream>

namespace marginalia {

std::ostream& operator<<(std::ostream& os, const BBox& b) {
  return os << "(" << b.x << "," << b.y << "," << b.w << "," << b.h << ")";
}

std::int64_t intersection_area(const BBox& a, const BBox& b) {
  const std::int64_t iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const std::int64_t ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return 0;
  return iw * ih;
}

double iou(const BBox& a, const BBox& b) {
  const std::int64_t inter = intersection_area(a, b);
  if (inter == 0) return 0.0;
  const std::int64_t uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BBox bounding_union(const BBox& a, const BBox& b) {
  const int x0 = std::min(a.x, b.x);
  const int y0 = std::min(a.y, b.y);
  return {x0, y0, std::max(a.right(), b.right()) - x0, std::max(a.bottom(), b.bottom()) - y0};
}

}  // namespace marginalia
