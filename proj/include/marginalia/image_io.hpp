#pragma once

#include <filesystem>

#include "marginalia/raster.hpp"

namespace marginalia {

/// Load a PNG (any bit depth / colour type) or binary/ASCII PGM as 8-bit
/// grayscale. Colour inputs are reduced with `luma`. Throws InputError.
Raster read_image(const std::filesystem::path& path);

/// Write 8-bit grayscale PNG. Output bytes depend only on the pixels.
void write_png(const std::filesystem::path& path, const Raster& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Binary PGM (P5).
void write_pgm(const std::filesystem::path& path, const Raster& image);

}  // namespace marginalia
