#pragma once

#include <optional>
#include <string>
#include <vector>

#include "marginalia/raster.hpp"

namespace marginalia {

/// Row sums (one entry per row).
template <typename Derived>
Profile horizontal_projection(const Eigen::DenseBase<Derived>& img) {
  return img.derived().template cast<std::int64_t>().rowwise().sum().matrix();
}

/// Column sums (one entry per column).
template <typename Derived>
Profile vertical_projection(const Eigen::DenseBase<Derived>& img) {
  return img.derived().template cast<std::int64_t>().colwise().sum().transpose().matrix();
}

/// min(255, |Gx| + |Gy|) with the 3x3 Sobel kernels and edge replication.
Raster sobel_magnitude(const Raster& gray);

/// Half-open span [begin, end).
struct Span {
  int begin = 0;
  int end = 0;

  int length() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// Maximal runs of entries >= (max + min) / 2. Empty for a flat profile.
std::vector<Span> threshold_runs(const Profile& profile);

/// Grow each run by `pad` on both sides without crossing [0, n) or the
/// neighbouring spans, so the result stays disjoint and ordered.
std::vector<Span> pad_spans(const std::vector<Span>& runs, int pad, int n);

struct LineSegment {
  Span rows;
  Raster image;
};

struct LineSplit {
  std::vector<LineSegment> lines;
  std::optional<std::string> diagnostic;
};

/// Projection of the Sobel image, midpoint threshold, 1-row padding.
LineSplit split_lines(const Raster& crop);

/// Otsu threshold: the smallest t maximizing between-class variance of
/// {<= t} vs {> t}, compared exactly in integers. Empty when the image
/// has a single intensity.
std::optional<int> otsu_threshold(const Raster& gray);

/// Pixels <= Otsu threshold are ink. A single-intensity image is all
/// background.
BinaryRaster binarize(const Raster& gray);

/// Cut columns from per-column ink counts: interior zero runs strictly
/// longer than their mean split words; outer empty columns are trimmed.
std::vector<Span> word_spans(const std::vector<int>& ink_per_column);

struct WordSegment {
  Span cols;
  Raster image;
};

struct WordSplit {
  std::vector<WordSegment> words;
  std::optional<std::string> diagnostic;
};

WordSplit split_words(const Raster& line);

struct SegmentedLine {
  Span rows;
  std::vector<WordSegment> words;
};

struct Segmentation {
  std::vector<SegmentedLine> lines;
  std::vector<std::string> diagnostics;

  std::size_t word_count() const;
};

/// Lines, then words within each line.
Segmentation segment_marginalia(const Raster& crop);

}  // namespace marginalia
