#include "marginalia/segment.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <utility>

namespace marginalia {

Raster sobel_magnitude(const Raster& gray) {
  const int w = width_of(gray);
  const int h = height_of(gray);
  Raster out(h, w);
  auto px = [&](int r, int c) -> int {
    return gray(std::clamp(r, 0, h - 1), std::clamp(c, 0, w - 1));
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int gx = (px(r - 1, c + 1) + 2 * px(r, c + 1) + px(r + 1, c + 1)) -
                     (px(r - 1, c - 1) + 2 * px(r, c - 1) + px(r + 1, c - 1));
      const int gy = (px(r + 1, c - 1) + 2 * px(r + 1, c) + px(r + 1, c + 1)) -
                     (px(r - 1, c - 1) + 2 * px(r - 1, c) + px(r - 1, c + 1));
      out(r, c) = static_cast<std::uint8_t>(std::min(255, std::abs(gx) + std::abs(gy)));
    }
  }
  return out;
}

std::vector<Span> threshold_runs(const Profile& profile) {
  std::vector<Span> runs;
  if (profile.size() == 0) return runs;
  const std::int64_t hi = profile.maxCoeff();
  const std::int64_t lo = profile.minCoeff();
  if (hi == lo) return runs;
  // v >= (hi + lo) / 2  <=>  2v >= hi + lo
  const int n = static_cast<int>(profile.size());
  for (int i = 0; i < n;) {
    if (2 * profile[i] < hi + lo) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && 2 * profile[j] >= hi + lo) ++j;
    runs.push_back({i, j});
    i = j;
  }
  return runs;
}

std::vector<Span> pad_spans(const std::vector<Span>& runs, int pad, int n) {
  std::vector<Span> out;
  out.reserve(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const int floor_ = out.empty() ? 0 : out.back().end;
    const int ceil_ = i + 1 < runs.size() ? runs[i + 1].begin : n;
    out.push_back({std::max(floor_, runs[i].begin - pad), std::min(ceil_, runs[i].end + pad)});
  }
  return out;
}

LineSplit split_lines(const Raster& crop) {
  LineSplit out;
  if (crop.size() == 0) {
    out.diagnostic = "empty crop";
    return out;
  }
  const Profile profile = horizontal_projection(sobel_magnitude(crop));
  const auto runs = threshold_runs(profile);
  if (runs.empty()) {
    out.diagnostic = "no text structure: flat projection profile";
    return out;
  }
  for (const Span& s : pad_spans(runs, 1, height_of(crop))) {
    out.lines.push_back({s, crop.block(s.begin, 0, s.length(), crop.cols())});
  }
  return out;
}

namespace {

using u128 = unsigned __int128;

// a * b as a 256-bit (hi, lo) pair
std::pair<u128, u128> mul_wide(u128 a, u128 b) {
  const u128 mask = ~std::uint64_t{0};
  const u128 a0 = a & mask, a1 = a >> 64, b0 = b & mask, b1 = b >> 64;
  const u128 p00 = a0 * b0, p01 = a0 * b1, p10 = a1 * b0, p11 = a1 * b1;
  const u128 mid = (p00 >> 64) + (p01 & mask) + (p10 & mask);
  return {p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64), (mid << 64) | (p00 & mask)};
}

}  // namespace

std::optional<int> otsu_threshold(const Raster& gray) {
  std::array<std::int64_t, 256> hist{};
  for (Eigen::Index i = 0; i < gray.size(); ++i) ++hist[gray.data()[i]];
  const std::int64_t n = gray.size();
  std::int64_t total = 0;
  for (int v = 0; v < 256; ++v) total += v * hist[static_cast<std::size_t>(v)];

  // between-class variance is (n*s0 - n0*total)^2 / (n^2 * n0 * n1);
  // compare num/den pairs exactly by cross-multiplication
  std::optional<int> best;
  u128 best_num = 0, best_den = 1;
  std::int64_t n0 = 0, s0 = 0;
  for (int t = 0; t < 255; ++t) {
    n0 += hist[static_cast<std::size_t>(t)];
    s0 += t * hist[static_cast<std::size_t>(t)];
    const std::int64_t n1 = n - n0;
    if (n0 == 0 || n1 == 0) continue;
    const __int128 diff = static_cast<__int128>(n) * s0 - static_cast<__int128>(n0) * total;
    const u128 num = static_cast<u128>(diff < 0 ? -diff : diff);
    const u128 num2 = num * num;
    const u128 den = static_cast<u128>(n0) * static_cast<u128>(n1);
    if (!best || mul_wide(num2, best_den) > mul_wide(best_num, den)) {
      best = t;
      best_num = num2;
      best_den = den;
    }
  }
  return best;
}

BinaryRaster binarize(const Raster& gray) {
  const auto t = otsu_threshold(gray);
  if (!t) return BinaryRaster::Constant(gray.rows(), gray.cols(), false);
  return gray <= static_cast<std::uint8_t>(*t);
}

std::vector<Span> word_spans(const std::vector<int>& ink) {
  const int n = static_cast<int>(ink.size());
  int first = 0;
  while (first < n && ink[static_cast<std::size_t>(first)] == 0) ++first;
  if (first == n) return {};
  int last = n - 1;
  while (ink[static_cast<std::size_t>(last)] == 0) --last;

  std::vector<Span> gaps;
  for (int c = first; c <= last;) {
    if (ink[static_cast<std::size_t>(c)] != 0) {
      ++c;
      continue;
    }
    int e = c;
    while (ink[static_cast<std::size_t>(e)] == 0) ++e;
    gaps.push_back({c, e});
    c = e;
  }
  std::int64_t gap_total = 0;
  for (const Span& g : gaps) gap_total += g.length();
  const auto gap_count = static_cast<std::int64_t>(gaps.size());

  std::vector<Span> words;
  int begin = first;
  for (const Span& g : gaps) {
    // length > mean  <=>  length * count > total
    if (std::int64_t{g.length()} * gap_count > gap_total) {
      words.push_back({begin, g.begin});
      begin = g.end;
    }
  }
  words.push_back({begin, last + 1});
  return words;
}

WordSplit split_words(const Raster& line) {
  WordSplit out;
  const BinaryRaster ink = binarize(line);
  const Profile counts = vertical_projection(ink);
  std::vector<int> per_col(static_cast<std::size_t>(counts.size()));
  for (Eigen::Index c = 0; c < counts.size(); ++c) per_col[static_cast<std::size_t>(c)] = static_cast<int>(counts[c]);
  const auto spans = word_spans(per_col);
  if (spans.empty()) {
    out.diagnostic = "no ink columns";
    return out;
  }
  for (const Span& s : spans) out.words.push_back({s, line.block(0, s.begin, line.rows(), s.length())});
  return out;
}

std::size_t Segmentation::word_count() const {
  std::size_t n = 0;
  for (const auto& l : lines) n += l.words.size();
  return n;
}

Segmentation segment_marginalia(const Raster& crop) {
  Segmentation seg;
  const LineSplit lines = split_lines(crop);
  if (lines.diagnostic) seg.diagnostics.push_back(*lines.diagnostic);
  for (std::size_t i = 0; i < lines.lines.size(); ++i) {
    const LineSegment& line = lines.lines[i];
    WordSplit words = split_words(line.image);
    if (words.diagnostic) seg.diagnostics.push_back("line " + std::to_string(i) + ": " + *words.diagnostic);
    seg.lines.push_back({line.rows, std::move(words.words)});
  }
  return seg;
}

}  // namespace marginalia
