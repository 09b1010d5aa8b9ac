#include <doctest.h>

#include <random>

#include "marginalia/errors.hpp"
#include "marginalia/image_io.hpp"
#include "marginalia/jsonl.hpp"
#include "test_support.hpp"

using namespace marginalia;
using testing_support::TempDir;

TEST_SUITE("io") {

TEST_CASE("PNG round trip preserves pixels and is byte-stable") {
  TempDir dir("png");
  std::mt19937_64 rng(1);
  const Raster img = testing_support::random_raster(rng, 31, 17);
  write_png(dir / "a.png", img);
  write_png(dir / "b.png", img);
  CHECK((read_image(dir / "a.png") == img).all());
  CHECK(testing_support::slurp(dir / "a.png") == testing_support::slurp(dir / "b.png"));
}

TEST_CASE("RGB PNG reads back as luma") {
  TempDir dir("rgb");
  RgbImage rgb{{Raster::Constant(4, 5, 255), Raster::Constant(4, 5, 0), Raster::Constant(4, 5, 0)}};
  write_png(dir / "red.png", rgb);
  const Raster gray = read_image(dir / "red.png");
  CHECK(gray.rows() == 4);
  CHECK(gray.cols() == 5);
  CHECK((gray == luma(255, 0, 0)).all());
}

TEST_CASE("binary and ASCII PGM") {
  TempDir dir("pgm");
  std::mt19937_64 rng(2);
  const Raster img = testing_support::random_raster(rng, 6, 4);
  write_pgm(dir / "a.pgm", img);
  CHECK((read_image(dir / "a.pgm") == img).all());
  testing_support::spit(dir / "b.pgm", "P2\n# comment\n3 2\n255\n0 1 2\n3 4 255\n");
  Raster want(2, 3);
  want << 0, 1, 2, 3, 4, 255;
  CHECK((read_image(dir / "b.pgm") == want).all());
}

TEST_CASE("unreadable images raise InputError") {
  TempDir dir("bad");
  testing_support::spit(dir / "bad.png", "\x89PNG\r\n\x1a\nnot really");
  testing_support::spit(dir / "bad.txt", "hello");
  CHECK_THROWS_AS(read_image(dir / "bad.png"), InputError);
  CHECK_THROWS_AS(read_image(dir / "bad.txt"), InputError);
  CHECK_THROWS_AS(read_image(dir / "missing.png"), InputError);
}

TEST_CASE("jsonl header and records") {
  const auto doc = parse_jsonl("{\"_header\":{\"stage\":\"x\"}}\n\n{\"a\":1}\n{\"a\":2}\n");
  REQUIRE(doc.header);
  CHECK(doc.header->at("stage") == "x");
  REQUIRE(doc.records.size() == 2);
  CHECK(doc.records[0].line_no == 3);
  CHECK(doc.records[1].value.at("a") == 2);
}

TEST_CASE("jsonl errors name the line") {
  try {
    parse_jsonl("{\"a\":1}\n{oops\n", "f.jsonl");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("f.jsonl:2:") == 0);
  }
  CHECK_THROWS_AS(parse_jsonl("[1,2]\n"), InputError);
  CHECK_THROWS_AS(parse_jsonl("{\"a\":1}\n{\"_header\":{}}\n"), InputError);
}

TEST_CASE("write_jsonl is deterministic and round-trips") {
  TempDir dir("jsonl");
  std::vector<Json> rows{{{"b", 1}, {"a", Json::array({1, 2})}}, {{"z", "q"}}};
  write_jsonl(dir / "x.jsonl", rows, Json{{"stage", "t"}});
  const auto text = testing_support::slurp(dir / "x.jsonl");
  CHECK(text == "{\"_header\":{\"stage\":\"t\"}}\n{\"a\":[1,2],\"b\":1}\n{\"z\":\"q\"}\n");
  const auto doc = read_jsonl(dir / "x.jsonl");
  CHECK(doc.records[0].value == rows[0]);
  write_jsonl(dir / "empty.jsonl", {});
  CHECK(testing_support::slurp(dir / "empty.jsonl").empty());
}

TEST_CASE("box json validation") {
  CHECK(box_from_json(Json::array({1, 2, 3, 4})) == BBox{1, 2, 3, 4});
  CHECK_THROWS_AS(box_from_json(Json::array({1, 2, 0, 4})), InputError);
  CHECK_THROWS_AS(box_from_json(Json::array({1, 2, 3})), InputError);
  CHECK_THROWS_AS(box_from_json(Json("x")), InputError);
}

}
