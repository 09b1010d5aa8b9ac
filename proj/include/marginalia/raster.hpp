#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "marginalia/geometry.hpp"

namespace marginalia {

/// Dense single-channel image, indexed (row, col) = (y, x).
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit grayscale page or crop.
using Raster = Image<std::uint8_t>;

/// Ink mask, true = foreground.
using BinaryRaster = Image<bool>;

/// Per-row or per-column sums.
using Profile = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

struct RgbImage {
  std::array<Raster, 3> planes;  // r, g, b

  int width() const { return static_cast<int>(planes[0].cols()); }
  int height() const { return static_cast<int>(planes[0].rows()); }
};

template <typename Derived>
int width_of(const Eigen::DenseBase<Derived>& img) {
  return static_cast<int>(img.cols());
}
template <typename Derived>
int height_of(const Eigen::DenseBase<Derived>& img) {
  return static_cast<int>(img.rows());
}

template <typename Derived>
BBox full_box(const Eigen::DenseBase<Derived>& img) {
  return {0, 0, width_of(img), height_of(img)};
}

/// Copy of the pixels under `box`. Throws std::out_of_range when the box
/// is invalid or leaves the image.
template <typename Derived>
Image<typename Derived::Scalar> crop(const Eigen::DenseBase<Derived>& img, const BBox& box) {
  if (!box.fits(width_of(img), height_of(img))) {
    throw std::out_of_range("crop box outside image");
  }
  return img.derived().block(box.y, box.x, box.h, box.w);
}

/// Mirror left-right.
template <typename Derived>
Image<typename Derived::Scalar> mirror_columns(const Eigen::DenseBase<Derived>& img) {
  return img.derived().rowwise().reverse();
}

/// Bilinear resample with pixel-centre alignment. Integer scalars are
/// rounded half-up and clamped to the scalar's range.
template <typename Scalar>
Image<Scalar> resize(const Image<Scalar>& src, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) throw std::invalid_argument("resize target must be >= 1");
  const int sw = width_of(src);
  const int sh = height_of(src);
  if (sw == target_w && sh == target_h) return src;

  struct Tap {
    int i0, i1;
    double f;
  };
  auto taps = [](int src_n, int dst_n) {
    std::vector<Tap> t(static_cast<std::size_t>(dst_n));
    const double scale = static_cast<double>(src_n) / dst_n;
    for (int d = 0; d < dst_n; ++d) {
      double s = (d + 0.5) * scale - 0.5;
      if (s < 0) s = 0;
      if (s > src_n - 1) s = src_n - 1;
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, src_n - 1);
      t[static_cast<std::size_t>(d)] = {i0, i1, s - i0};
    }
    return t;
  };
  const auto xs = taps(sw, target_w);
  const auto ys = taps(sh, target_h);

  Image<Scalar> out(target_h, target_w);
  for (int r = 0; r < target_h; ++r) {
    const Tap& ty = ys[static_cast<std::size_t>(r)];
    for (int c = 0; c < target_w; ++c) {
      const Tap& tx = xs[static_cast<std::size_t>(c)];
      const double top = (1 - tx.f) * static_cast<double>(src(ty.i0, tx.i0)) +
                         tx.f * static_cast<double>(src(ty.i0, tx.i1));
      const double bot = (1 - tx.f) * static_cast<double>(src(ty.i1, tx.i0)) +
                         tx.f * static_cast<double>(src(ty.i1, tx.i1));
      const double v = (1 - ty.f) * top + ty.f * bot;
      if constexpr (std::is_integral_v<Scalar>) {
        double rounded = std::floor(v + 0.5);
        rounded = std::clamp(rounded, static_cast<double>(std::numeric_limits<Scalar>::min()),
                             static_cast<double>(std::numeric_limits<Scalar>::max()));
        out(r, c) = static_cast<Scalar>(rounded);
      } else {
        out(r, c) = static_cast<Scalar>(v);
      }
    }
  }
  return out;
}

/// Scale a box from a (src_w x src_h) frame into (dst_w x dst_h): corners
/// are scaled and rounded half-up, clamped to the frame, and the result
/// forced to at least 1x1.
BBox scale_box(const BBox& box, int src_w, int src_h, int dst_w, int dst_h);

/// Resample a page and carry its boxes into the new frame.
std::pair<Raster, std::vector<BBox>> rescale_page(const Raster& page, std::span<const BBox> boxes,
                                                  int target_w, int target_h);

/// ITU-R BT.601 luma, rounded half-up.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Gray page replicated into three planes.
RgbImage to_rgb(const Raster& gray);

/// Clamp a double intensity to [0, 255] after rounding half-up.
inline std::uint8_t saturate_u8(double v) {
  const double r = std::floor(v + 0.5);
  if (r <= 0) return 0;
  if (r >= 255) return 255;
  return static_cast<std::uint8_t>(r);
}

}  // namespace marginalia
