#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "marginalia/raster.hpp"

namespace marginalia {

enum class Variant { original, hflip, noise, brightness_contrast };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);

inline constexpr std::array<Variant, 4> kVariants = {Variant::original, Variant::hflip, Variant::noise,
                                                     Variant::brightness_contrast};

struct AugmentParams {
  double noise_sigma = 10.0;
  double alpha_min = 0.8;
  double alpha_max = 1.2;
  double beta_min = -30.0;
  double beta_max = 30.0;
};

struct AugmentedSample {
  std::string source_page_id;
  Variant variant = Variant::original;
  Raster image;
  std::vector<BBox> boxes;
  std::uint64_t seed = 0;  // stream seed of the variant; 0 for deterministic variants
  double alpha = 1.0;      // brightness_contrast only
  double beta = 0.0;

  /// "<page_id>_<variant>"
  std::string key() const;
};

/// Mirror the image left-right and remap boxes to x' = W - x - w.
std::pair<Raster, std::vector<BBox>> hflip(const Raster& image, std::span<const BBox> boxes);

/// out = clamp(round(in + sigma * z)), z standard normal drawn per pixel
/// from a counter stream, so the result is a pure function of
/// (image, sigma, seed).
Raster gaussian_noise(const Raster& image, double sigma, std::uint64_t seed);

/// out = clamp(round(alpha * in + beta)).
Raster brightness_contrast(const Raster& image, double alpha, double beta);

/// Original plus one sample of each transform. The page seed is
/// derive_seed(corpus_seed, page_id); the noise and jitter streams are
/// derived from it by variant name.
std::array<AugmentedSample, 4> augment_page(const std::string& page_id, const Raster& image,
                                            std::span<const BBox> boxes, std::uint64_t corpus_seed,
                                            const AugmentParams& params = {});

}  // namespace marginalia
