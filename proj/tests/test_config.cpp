#include <doctest.h>

#include "marginalia/config.hpp"
#include "marginalia/errors.hpp"
#include "test_support.hpp"

using namespace marginalia;

TEST_SUITE("config") {

TEST_CASE("defaults") {
  const PipelineConfig c;
  CHECK(c.rescale_width == 350);
  CHECK(c.rescale_height == 500);
  CHECK(c.split_ratio == 0.9);
  CHECK(c.n_negatives == 4);
  CHECK(c.roi_size == 227);
  CHECK(c.eval_iou_threshold == 0.5);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("sections, comments and quotes") {
  const PipelineConfig c = parse_config(R"(
# top comment
seed = 42
[paths]
corpus_dir = "/data/books # not a comment"
work_dir = out   # trailing comment
[mser]
delta = 5
max_variation = 0.3
[segment]
use_detections = false
)");
  CHECK(c.seed == 42);
  CHECK(c.corpus_dir == "/data/books # not a comment");
  CHECK(c.work_dir == "out");
  CHECK(c.proposals.mser.delta == 5);
  CHECK(c.proposals.mser.max_variation == 0.3);
  CHECK_FALSE(c.segment_use_detections);
}

TEST_CASE("every key is settable") {
  for (const auto& key : PipelineConfig::keys()) {
    PipelineConfig c;
    const std::string value = key.rfind("paths.", 0) == 0 ? "x" : key == "segment.use_detections" ? "true" : "1";
    CHECK_NOTHROW(c.set(key, value));
  }
}

TEST_CASE("bad keys and values name the line") {
  try {
    parse_config("seed = 1\nbogus = 3\n");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("config:2:") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("seed = abc\n"), InputError);
  CHECK_THROWS_AS(parse_config("jobs = 2x\n"), InputError);
  CHECK_THROWS_AS(parse_config("[mser\n"), InputError);
  CHECK_THROWS_AS(parse_config("novalue\n"), InputError);
}

TEST_CASE("validation rejects out-of-range values") {
  for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{{"split.ratio", "1"},
                                                                                   {"jobs", "0"},
                                                                                   {"rescale.width", "0"},
                                                                                   {"augment.alpha_min", "0"},
                                                                                   {"mser.delta", "0"},
                                                                                   {"mser.dedup_iou", "0"},
                                                                                   {"samples.roi_size", "0"},
                                                                                   {"eval.iou_threshold", "1.5"}}) {
    PipelineConfig c;
    c.set(key, value);
    CAPTURE(key);
    CHECK_THROWS_AS(c.validate(), InputError);
  }
}

TEST_CASE("config json leaves out paths and thread count") {
  PipelineConfig a, b;
  b.corpus_dir = "/elsewhere";
  b.work_dir = "/tmp/w";
  b.jobs = 8;
  CHECK(to_json(a) == to_json(b));
  b.seed = 1;
  CHECK(to_json(a) != to_json(b));
  CHECK(to_json(a).at("mser").at("delta") == 3);
}

TEST_CASE("load_config reads a file over a base") {
  testing_support::TempDir dir("cfg");
  testing_support::spit(dir / "c.ini", "[samples]\nn_negatives = 7\n");
  PipelineConfig base;
  base.seed = 9;
  const PipelineConfig c = load_config(dir / "c.ini", base);
  CHECK(c.n_negatives == 7);
  CHECK(c.seed == 9);
  CHECK_THROWS_AS(load_config(dir / "missing.ini"), InputError);
}

}
