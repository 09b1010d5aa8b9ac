#include <doctest.h>

#include <random>

#include "marginalia/segment.hpp"
#include "marginalia/synthetic.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace marginalia;

namespace {

InkLineSpec band_spec(std::vector<int> words) {
  InkLineSpec s;
  s.letters_per_word = std::move(words);
  s.height = 8;
  s.stroke_width = 2;
  s.letter_gap = 2;
  s.word_gap = 12;
  s.ink = 30;
  return s;
}

/// k lines of stroke text separated by 8 blank rows.
Raster banded(int k) {
  const InkLineSpec s = band_spec({4, 5, 3});
  Raster img = Raster::Constant(6 + k * 16, ink_line_width(s) + 8, 230);
  for (int i = 0; i < k; ++i) draw_ink_line(img, 4, 4 + i * 16, s);
  return img;
}

std::vector<int> random_ink_row(std::mt19937_64& rng) {
  const int n = 1 + static_cast<int>(rng() % 80);
  std::vector<int> row(static_cast<std::size_t>(n));
  const double density = 0.2 + 0.6 * static_cast<double>(rng() % 100) / 100.0;
  for (auto& v : row) v = (static_cast<double>(rng() % 1000) / 1000.0 < density) ? 1 + static_cast<int>(rng() % 5) : 0;
  return row;
}

}  // namespace

TEST_SUITE("segment") {

TEST_CASE("sobel matches explicit convolution") {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 20; ++i) {
    const Raster img = testing_support::random_raster(rng, 1 + static_cast<int>(rng() % 20), 1 + static_cast<int>(rng() % 20));
    CHECK((sobel_magnitude(img) == oracle::sobel(img)).all());
  }
}

TEST_CASE("projections") {
  Raster img(2, 3);
  img << 1, 2, 3, 4, 5, 6;
  CHECK(horizontal_projection(img) == (Profile(2) << 6, 15).finished());
  CHECK(vertical_projection(img) == (Profile(3) << 5, 7, 9).finished());
}

TEST_CASE("threshold runs use the midpoint of the profile range") {
  Profile p(8);
  p << 0, 5, 10, 4, 6, 0, 10, 10;
  // threshold 5 inclusive
  CHECK(threshold_runs(p) == std::vector<Span>{{1, 3}, {4, 5}, {6, 8}});
  CHECK(threshold_runs(Profile::Constant(5, 3)).empty());
}

TEST_CASE("padding never crosses neighbours or the frame") {
  const std::vector<Span> runs{{0, 2}, {3, 5}, {9, 10}};
  CHECK(pad_spans(runs, 1, 10) == std::vector<Span>{{0, 3}, {3, 6}, {8, 10}});
  std::mt19937_64 rng(52);
  for (int i = 0; i < 200; ++i) {
    Profile p(40);
    for (int k = 0; k < 40; ++k) p[k] = static_cast<std::int64_t>(rng() % 10);
    const auto padded = pad_spans(threshold_runs(p), 1 + static_cast<int>(rng() % 3), 40);
    for (std::size_t k = 0; k < padded.size(); ++k) {
      CHECK(padded[k].begin >= 0);
      CHECK(padded[k].end <= 40);
      CHECK(padded[k].begin < padded[k].end);
      if (k > 0) CHECK(padded[k - 1].end <= padded[k].begin);
    }
  }
}

TEST_CASE("k separated ink bands give k lines") {
  for (int k = 1; k <= 6; ++k) {
    const LineSplit split = split_lines(banded(k));
    CAPTURE(k);
    CHECK_FALSE(split.diagnostic);
    REQUIRE(split.lines.size() == static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      // each line holds its band (rows 4+16i .. 12+16i)
      CHECK(split.lines[i].rows.begin <= 4 + 16 * i);
      CHECK(split.lines[i].rows.end >= 12 + 16 * i);
      CHECK(split.lines[i].image.rows() == split.lines[i].rows.length());
    }
  }
}

TEST_CASE("lines that share rows merge into one") {
  // two lines of text covering 60% of the width each, offset so their
  // rows overlap: the projection never drops below the threshold
  Raster img = Raster::Constant(40, 120, 230);
  InkLineSpec s = band_spec({3, 4, 3});
  s.height = 14;
  draw_ink_line(img, 0, 5, s);
  draw_ink_line(img, 48, 14, s);
  const LineSplit split = split_lines(img);
  CHECK(split.lines.size() == 1);
}

TEST_CASE("blank crops are reported, not split") {
  const LineSplit split = split_lines(Raster::Constant(20, 20, 200));
  CHECK(split.lines.empty());
  REQUIRE(split.diagnostic);
}

TEST_CASE("word spans match the gap-scanning oracle") {
  std::mt19937_64 rng(53);
  for (int i = 0; i < 500; ++i) {
    const auto row = random_ink_row(rng);
    CHECK(word_spans(row) == oracle::word_spans(row));
  }
  CHECK(word_spans({0, 0, 0}).empty());
  CHECK(word_spans({0, 1, 1, 0}) == std::vector<Span>{{1, 3}});
  // gaps 1, 1, 4: mean 2, only the 4-gap cuts
  CHECK(word_spans({1, 0, 1, 0, 1, 0, 0, 0, 0, 1}) == std::vector<Span>{{0, 5}, {9, 10}});
  // equal gaps never exceed their mean
  CHECK(word_spans({1, 0, 0, 1, 0, 0, 1}) == std::vector<Span>{{0, 7}});
}

TEST_CASE("otsu matches the exhaustive maximizer") {
  std::mt19937_64 rng(54);
  for (int i = 0; i < 200; ++i) {
    Raster img = i % 2 ? testing_support::random_raster(rng, 16, 16)
                       : testing_support::random_raster(rng, 16, 16, 0, 3 + static_cast<int>(rng() % 20));
    CHECK(otsu_threshold(img) == oracle::otsu(img));
  }
  Raster two(1, 4);
  two << 10, 10, 200, 200;
  CHECK(otsu_threshold(two) == 10);
  CHECK_FALSE(otsu_threshold(Raster::Constant(4, 4, 9)));
}

TEST_CASE("binarize marks dark pixels as ink") {
  Raster img(1, 4);
  img << 10, 20, 200, 210;
  const BinaryRaster ink = binarize(img);
  CHECK(ink(0, 0));
  CHECK(ink(0, 1));
  CHECK_FALSE(ink(0, 2));
  CHECK_FALSE(ink(0, 3));
  CHECK_FALSE(binarize(Raster::Constant(3, 3, 0)).any());
}

TEST_CASE("word split on a drawn line") {
  Raster img = Raster::Constant(12, 80, 230);
  const InkLineSpec s = band_spec({3, 4, 2});
  draw_ink_line(img, 3, 2, s);
  const WordSplit split = split_words(img);
  REQUIRE(split.words.size() == 3);
  CHECK(split.words[0].cols == Span{3, 13});
  CHECK(split.words[1].cols == Span{25, 39});
  CHECK(split.words[2].cols == Span{51, 57});
  CHECK_FALSE(split_words(Raster::Constant(5, 5, 100)).diagnostic == std::nullopt);
}

TEST_CASE("segment_marginalia is deterministic and ordered") {
  const Raster img = banded(3);
  const Segmentation a = segment_marginalia(img);
  const Segmentation b = segment_marginalia(img);
  REQUIRE(a.lines.size() == 3);
  CHECK(a.word_count() == 9);
  REQUIRE(a.lines.size() == b.lines.size());
  for (std::size_t l = 0; l < a.lines.size(); ++l) {
    CHECK(a.lines[l].rows == b.lines[l].rows);
    if (l > 0) CHECK(a.lines[l - 1].rows.end <= a.lines[l].rows.begin);
    for (std::size_t w = 0; w < a.lines[l].words.size(); ++w) {
      CHECK(a.lines[l].words[w].cols == b.lines[l].words[w].cols);
      CHECK((a.lines[l].words[w].image == b.lines[l].words[w].image).all());
      if (w > 0) CHECK(a.lines[l].words[w - 1].cols.end <= a.lines[l].words[w].cols.begin);
    }
  }
}

}
