#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "marginalia/dataset.hpp"
#include "marginalia/raster.hpp"

namespace marginalia {

/// Handwriting-like ink: `letters` vertical strokes per word separated by
/// letter gaps, words separated by wider gaps.
struct InkLineSpec {
  std::vector<int> letters_per_word;
  int stroke_width = 2;
  int letter_gap = 2;
  int word_gap = 12;
  int height = 12;
  std::uint8_t ink = 40;
};

/// Width in pixels of the line drawn by draw_ink_line.
int ink_line_width(const InkLineSpec& spec);

/// Paint the line with its top-left corner at (x, y); returns its extent.
BBox draw_ink_line(Raster& image, int x, int y, const InkLineSpec& spec);

struct SyntheticPage {
  PageAnnotation annotation;
  Raster image;
};

/// A printed-text block in the middle of the page and one or two blocks
/// of marginalia in the side margins, each annotated with a ground-truth
/// box. Pure function of (page_id, size, seed).
SyntheticPage synthesize_page(const std::string& page_id, int width, int height, std::uint64_t seed);

/// Write `count` pages as PNG + LabelMe JSON into `dir`, ids page_000, ...
std::vector<PageAnnotation> write_synthetic_corpus(const std::filesystem::path& dir, int count, int width, int height,
                                                   std::uint64_t seed);

}  // namespace marginalia
