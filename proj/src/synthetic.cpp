#include "marginalia/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "marginalia/errors.hpp"
#include "marginalia/image_io.hpp"
#include "marginalia/random.hpp"

namespace marginalia {

namespace fs = std::filesystem;

int ink_line_width(const InkLineSpec& spec) {
  int w = 0;
  for (std::size_t i = 0; i < spec.letters_per_word.size(); ++i) {
    const int k = spec.letters_per_word[i];
    w += k * spec.stroke_width + (k - 1) * spec.letter_gap;
    if (i + 1 < spec.letters_per_word.size()) w += spec.word_gap;
  }
  return w;
}

BBox draw_ink_line(Raster& image, int x, int y, const InkLineSpec& spec) {
  int cx = x;
  for (std::size_t i = 0; i < spec.letters_per_word.size(); ++i) {
    for (int l = 0; l < spec.letters_per_word[i]; ++l) {
      image.block(y, cx, spec.height, spec.stroke_width).setConstant(spec.ink);
      cx += spec.stroke_width;
      if (l + 1 < spec.letters_per_word[i]) cx += spec.letter_gap;
    }
    if (i + 1 < spec.letters_per_word.size()) cx += spec.word_gap;
  }
  return {x, y, cx - x, spec.height};
}

SyntheticPage synthesize_page(const std::string& page_id, int width, int height, std::uint64_t seed) {
  if (width < 200 || height < 200) throw std::invalid_argument("synthesize_page: page too small");
  CounterRng rng(derive_seed(seed, page_id));
  auto uniform_int = [&](int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); };

  SyntheticPage page;
  page.image = Raster::Constant(height, width, 235);
  const double s = width / 700.0;  // layout scale relative to a 700 px page

  const int body_x0 = static_cast<int>(0.24 * width);
  const int body_x1 = static_cast<int>(0.76 * width);

  // foxing stains inside the body column, so they never touch the margins
  const int stains = uniform_int(2, 4);
  for (int k = 0; k < stains; ++k) {
    const int r = uniform_int(static_cast<int>(15 * s), static_cast<int>(30 * s));
    const int cx = uniform_int(body_x0 + r, body_x1 - r);
    const int cy = uniform_int(r, height - r - 1);
    const auto tone = static_cast<std::uint8_t>(uniform_int(160, 200));
    for (int y = cy - r; y <= cy + r; ++y) {
      for (int x = cx - r; x <= cx + r; ++x) {
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) page.image(y, x) = tone;
      }
    }
  }

  // printed body: regular short words on a fixed baseline grid
  const int line_pitch = std::max(8, static_cast<int>(24 * s));
  for (int y = static_cast<int>(0.08 * height); y + line_pitch < static_cast<int>(0.92 * height); y += line_pitch) {
    InkLineSpec spec;
    spec.height = std::max(3, static_cast<int>(9 * s));
    spec.stroke_width = std::max(1, static_cast<int>(2 * s));
    spec.letter_gap = std::max(1, static_cast<int>(2 * s));
    spec.word_gap = std::max(3, static_cast<int>(9 * s));
    spec.ink = 30;
    int x = body_x0;
    while (true) {
      spec.letters_per_word = {uniform_int(2, 7)};
      const int w = ink_line_width(spec);
      if (x + w > body_x1) break;
      draw_ink_line(page.image, x, y, spec);
      x += w + spec.word_gap;
    }
  }

  // marginalia blocks in the side margins
  const int blocks = uniform_int(1, 2);
  const bool first_left = rng.below(2) == 0;
  for (int b = 0; b < blocks; ++b) {
    const bool left = (b == 0) == first_left;
    InkLineSpec spec;
    spec.height = std::max(4, static_cast<int>(14 * s));
    spec.stroke_width = std::max(1, static_cast<int>(3 * s));
    spec.letter_gap = std::max(1, static_cast<int>(3 * s));
    spec.word_gap = std::max(4, static_cast<int>(14 * s));
    spec.ink = static_cast<std::uint8_t>(uniform_int(40, 80));
    const int n_lines = uniform_int(2, 3);
    const int pitch = spec.height + std::max(4, static_cast<int>(14 * s));
    const int margin_w = static_cast<int>(0.2 * width);
    const int x0 = left ? static_cast<int>(0.02 * width) : width - margin_w;
    const int top = (b == 0) ? uniform_int(static_cast<int>(0.1 * height), static_cast<int>(0.3 * height))
                             : uniform_int(static_cast<int>(0.55 * height), static_cast<int>(0.75 * height));
    BBox extent{};
    for (int l = 0; l < n_lines; ++l) {
      // words must fit the margin
      do {
        spec.letters_per_word.clear();
        const int words = uniform_int(2, 3);
        for (int k = 0; k < words; ++k) spec.letters_per_word.push_back(uniform_int(2, 4));
      } while (ink_line_width(spec) > margin_w - static_cast<int>(0.04 * width));
      const BBox line = draw_ink_line(page.image, x0, top + l * pitch, spec);
      extent = l == 0 ? line : bounding_union(extent, line);
    }
    const int pad = std::max(2, static_cast<int>(5 * s));
    BBox gt{extent.x - pad, extent.y - pad, extent.w + 2 * pad, extent.h + 2 * pad};
    gt.x = std::max(0, gt.x);
    gt.y = std::max(0, gt.y);
    gt.w = std::min(gt.w, width - gt.x);
    gt.h = std::min(gt.h, height - gt.y);
    page.annotation.marginalia.push_back(gt);
  }

  page.annotation.page_id = page_id;
  page.annotation.image_path = page_id + ".png";
  page.annotation.width = width;
  page.annotation.height = height;
  return page;
}

std::vector<PageAnnotation> write_synthetic_corpus(const fs::path& dir, int count, int width, int height,
                                                   std::uint64_t seed) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create '" + dir.string() + "': " + ec.message());
  std::vector<PageAnnotation> pages;
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "page_%03d", i);
    SyntheticPage page = synthesize_page(id, width, height, seed);
    write_png(dir / page.annotation.image_path, page.image);

    // one unrelated shape so label filtering is exercised
    Json doc = Json::parse(to_labelme(page.annotation));
    doc["shapes"].push_back({{"label", "printed_text"},
                             {"shape_type", "rectangle"},
                             {"points", Json::array({Json::array({static_cast<int>(0.24 * width), 10}),
                                                     Json::array({static_cast<int>(0.76 * width), 40})})}});
    std::ofstream out(dir / (std::string(id) + ".json"));
    out << doc.dump(2) << '\n';
    pages.push_back(page.annotation);
  }
  return pages;
}

}  // namespace marginalia
