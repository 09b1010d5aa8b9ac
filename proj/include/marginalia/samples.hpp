#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "marginalia/raster.hpp"

namespace marginalia {

enum class RoiLabel { marginalia, non_marginalia };

std::string_view to_string(RoiLabel l);
RoiLabel roi_label_from_string(std::string_view s);

struct RoiSample {
  std::string page_id;
  RoiLabel label = RoiLabel::marginalia;
  BBox source_box;  // the ground-truth box or proposal the tile came from
  BBox tile_box;    // the tile's own extent in page coordinates
  int tile_index = 0;
  Raster image;     // roi_size x roi_size
};

/// k = max(1, round(longer / shorter)), rounded half-up.
int tile_count(int w, int h);

/// Split a box into tile_count(w, h) equal tiles along its longer side;
/// the last tile takes the remainder. Square boxes yield one tile.
std::vector<BBox> tile_box(const BBox& box);

/// Crop each box, tile it, and resize every tile to roi_size x roi_size.
std::vector<RoiSample> positive_rois(const std::string& page_id, const Raster& page, std::span<const BBox> gt,
                                     int roi_size = 227);

struct NegativeRois {
  std::vector<RoiSample> samples;
  std::size_t chosen = 0;     // proposals picked (each may yield several tiles)
  std::size_t shortfall = 0;  // n - chosen when too few candidates
  std::vector<std::string> warnings;
};

/// Proposals with IoU exactly 0 against every ground-truth box, n of them
/// drawn without replacement under `seed`, tiled like positives.
NegativeRois negative_rois(const std::string& page_id, const Raster& page, std::span<const BBox> gt,
                           std::span<const BBox> proposals, std::size_t n, std::uint64_t seed,
                           int roi_size = 227);

}  // namespace marginalia
