#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "marginalia/raster.hpp"

namespace marginalia {

/// dark: regions of {I <= t}. bright: the same on 255 - I.
enum class Polarity { dark, bright };

std::string_view to_string(Polarity p);

/// One branch of the component tree: the life of a connected component of
/// {level <= t} from the level it appears until it is absorbed into a
/// larger (or older) component. When components meet, the one with the
/// larger area at t-1 carries on; ties go to the earlier birth, then the
/// smaller seed index.
struct Branch {
  int birth = 0;             // first level
  int end = 255;             // last level as itself
  int parent = -1;           // branch absorbing it at end + 1
  std::int64_t seed = 0;     // smallest raster index of the component at birth
  std::vector<std::int64_t> areas;  // areas[t - birth], t in [birth, end]

  std::int64_t area_at(int level) const { return areas[static_cast<std::size_t>(level - birth)]; }
  bool alive_at(int level) const { return level >= birth && level <= end; }
};

struct ComponentTree {
  int width = 0;
  int height = 0;
  Polarity polarity = Polarity::dark;
  std::vector<Branch> branches;  // ordered by (birth, seed)
  int root = -1;
};

/// Sweep thresholds 0..255 with a 4-connected union-find.
ComponentTree component_tree(const Raster& image, Polarity polarity);

/// The per-pixel level image the tree is built on.
Raster level_image(const Raster& image, Polarity polarity);

/// |Q(i+delta) - Q(i-delta)| / |Q(i)| on one branch; empty when either
/// end of the window falls outside the branch's life.
std::optional<double> stability(const Branch& branch, int level, int delta);

struct MserParams {
  int delta = 3;
  double max_variation = 0.25;
  std::int64_t min_area = 30;
  std::int64_t max_area = 0;  // 0 selects 90% of the image area
  Polarity polarity = Polarity::dark;
  double nested_area_ratio = 0.95;

  /// Throws std::invalid_argument for out-of-range values.
  void validate() const;
  std::int64_t effective_max_area(std::int64_t image_area) const;
};

/// Horizontal run [col_begin, col_end) on one row.
struct RowRun {
  int row = 0;
  int col_begin = 0;
  int col_end = 0;

  friend bool operator==(const RowRun&, const RowRun&) = default;
};

struct Region {
  int id = 0;
  Polarity polarity = Polarity::dark;
  int branch = -1;
  int level = 0;  // threshold at which the region was selected
  std::int64_t seed = 0;
  std::vector<RowRun> pixels;  // sorted by (row, col)
  std::map<int, std::int64_t> area_at_threshold;  // over the branch's life
  double stability = 0.0;
  BBox bbox;

  std::int64_t area() const { return area_at_threshold.at(level); }
};

/// Maximally stable extremal regions: local minima of stability along each
/// branch with stability < max_variation and area within bounds, after
/// collapsing nested pairs whose area ratio exceeds nested_area_ratio to
/// the more stable member.
std::vector<Region> extract_mser(const Raster& image, const MserParams& params);

/// Pixels of the 4-connected component of {level <= threshold} containing
/// `seed`, as sorted row runs.
std::vector<RowRun> component_runs(const Raster& levels, std::int64_t seed, int threshold);

BBox runs_bbox(const std::vector<RowRun>& runs);

struct ProposalParams {
  MserParams mser;
  std::int64_t tiny_min_area = 0;  // 0 selects 0.1% of the image area
  double dedup_iou = 0.9;
};

struct Proposal {
  BBox box;
  double score = 0.0;  // stability of the source region
  Polarity polarity = Polarity::dark;
};

/// MSER boxes from both polarities, tiny boxes dropped, near-duplicates
/// (IoU > dedup_iou) reduced to the more stable. Sorted by score.
std::vector<Proposal> proposals(const Raster& image, const ProposalParams& params);

}  // namespace marginalia
