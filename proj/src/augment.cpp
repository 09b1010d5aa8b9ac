#include "marginalia/augment.hpp"

#include <stdexcept>

#include "marginalia/errors.hpp"
#include "marginalia/random.hpp"

namespace marginalia {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::original: return "original";
    case Variant::hflip: return "hflip";
    case Variant::noise: return "noise";
    case Variant::brightness_contrast: return "brightness_contrast";
  }
  return "original";
}

Variant variant_from_string(std::string_view s) {
  for (Variant v : kVariants) {
    if (to_string(v) == s) return v;
  }
  throw InputError("unknown variant '" + std::string(s) + "'");
}

std::string AugmentedSample::key() const { return source_page_id + "_" + std::string(to_string(variant)); }

std::pair<Raster, std::vector<BBox>> hflip(const Raster& image, std::span<const BBox> boxes) {
  const int w = width_of(image);
  std::vector<BBox> out;
  out.reserve(boxes.size());
  for (const BBox& b : boxes) out.push_back({w - b.x - b.w, b.y, b.w, b.h});
  return {mirror_columns(image), std::move(out)};
}

Raster gaussian_noise(const Raster& image, double sigma, std::uint64_t seed) {
  if (sigma < 0) throw std::invalid_argument("gaussian_noise: sigma must be >= 0");
  if (sigma == 0) return image;
  const CounterRng rng(seed);
  Raster out(image.rows(), image.cols());
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    const double v = image.data()[i] + sigma * rng.normal_at(static_cast<std::uint64_t>(i));
    out.data()[i] = saturate_u8(v);
  }
  return out;
}

Raster brightness_contrast(const Raster& image, double alpha, double beta) {
  if (!(alpha > 0)) throw std::invalid_argument("brightness_contrast: alpha must be > 0");
  return image.unaryExpr([alpha, beta](std::uint8_t p) { return saturate_u8(alpha * p + beta); });
}

std::array<AugmentedSample, 4> augment_page(const std::string& page_id, const Raster& image,
                                            std::span<const BBox> boxes, std::uint64_t corpus_seed,
                                            const AugmentParams& params) {
  const std::uint64_t page_seed = derive_seed(corpus_seed, page_id);
  const std::vector<BBox> box_list(boxes.begin(), boxes.end());

  std::array<AugmentedSample, 4> out;
  out[0] = {page_id, Variant::original, image, box_list, 0, 1.0, 0.0};

  auto [flipped, flipped_boxes] = hflip(image, boxes);
  out[1] = {page_id, Variant::hflip, std::move(flipped), std::move(flipped_boxes), 0, 1.0, 0.0};

  const std::uint64_t noise_seed = derive_seed(page_seed, "noise");
  out[2] = {page_id, Variant::noise, gaussian_noise(image, params.noise_sigma, noise_seed), box_list,
            noise_seed, 1.0, 0.0};

  const std::uint64_t jitter_seed = derive_seed(page_seed, "brightness_contrast");
  CounterRng jitter(jitter_seed);
  const double alpha = params.alpha_min + (params.alpha_max - params.alpha_min) * jitter.uniform();
  const double beta = params.beta_min + (params.beta_max - params.beta_min) * jitter.uniform();
  out[3] = {page_id, Variant::brightness_contrast, brightness_contrast(image, alpha, beta), box_list,
            jitter_seed, alpha, beta};

  for (const auto& s : out) {
    for (const BBox& b : s.boxes) {
      if (!b.fits(width_of(s.image), height_of(s.image))) {
        throw InvariantViolation("augmented box leaves image for page '" + page_id + "'");
      }
    }
  }
  return out;
}

}  // namespace marginalia
