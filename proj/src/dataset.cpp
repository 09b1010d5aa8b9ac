#include "marginalia/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "marginalia/errors.hpp"
#include "marginalia/random.hpp"

namespace marginalia {

namespace {

const Json& require(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw InputError(std::string("labelme: missing required key '") + key + "'");
  }
  return obj.at(key);
}

std::string stem_of(std::string path) {
  std::replace(path.begin(), path.end(), '\\', '/');
  return std::filesystem::path(path).stem().string();
}

int round_coord(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace

bool is_marginalia_label(std::string_view label) {
  std::string lower(label);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.find("marginalia") != std::string::npos;
}

LabelmeParse parse_labelme(std::string_view document) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("labelme: malformed JSON: ") + e.what());
  }
  LabelmeParse out;
  PageAnnotation& page = out.page;
  try {
    page.image_path = require(doc, "imagePath").get<std::string>();
    page.height = require(doc, "imageHeight").get<int>();
    page.width = require(doc, "imageWidth").get<int>();
  } catch (const Json::type_error&) {
    throw InputError("labelme: imagePath/imageHeight/imageWidth have wrong types");
  }
  if (page.width < 1 || page.height < 1) throw InputError("labelme: image size must be positive");
  page.page_id = stem_of(page.image_path);
  const Json& shapes = require(doc, "shapes");
  if (!shapes.is_array()) throw InputError("labelme: 'shapes' must be an array");

  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const Json& shape = shapes[i];
    const std::string label = require(shape, "label").get<std::string>();
    if (!is_marginalia_label(label)) continue;
    const Json& points = require(shape, "points");
    if (!points.is_array() || points.empty()) {
      out.warnings.push_back("shape " + std::to_string(i) + ": no points, skipped");
      continue;
    }
    std::vector<std::pair<double, double>> pts;
    for (const Json& p : points) {
      if (!p.is_array() || p.size() != 2) throw InputError("labelme: point must be [x, y]");
      pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    const std::string type = shape.value("shape_type", std::string("rectangle"));
    double x0, x1, y0, y1;
    if (type == "circle" && pts.size() == 2) {
      const double r = std::hypot(pts[1].first - pts[0].first, pts[1].second - pts[0].second);
      x0 = pts[0].first - r;
      x1 = pts[0].first + r;
      y0 = pts[0].second - r;
      y1 = pts[0].second + r;
    } else {
      auto [xmin, xmax] = std::minmax_element(pts.begin(), pts.end(),
                                              [](auto& a, auto& b) { return a.first < b.first; });
      auto [ymin, ymax] = std::minmax_element(pts.begin(), pts.end(),
                                              [](auto& a, auto& b) { return a.second < b.second; });
      x0 = xmin->first;
      x1 = xmax->first;
      y0 = ymin->second;
      y1 = ymax->second;
    }
    const int ix0 = std::clamp(round_coord(x0), 0, page.width);
    const int ix1 = std::clamp(round_coord(x1), 0, page.width);
    const int iy0 = std::clamp(round_coord(y0), 0, page.height);
    const int iy1 = std::clamp(round_coord(y1), 0, page.height);
    if (ix1 <= ix0 || iy1 <= iy0) {
      out.warnings.push_back("shape " + std::to_string(i) + " ('" + label + "'): zero area, skipped");
      continue;
    }
    page.marginalia.push_back({ix0, iy0, ix1 - ix0, iy1 - iy0});
  }
  return out;
}

std::string to_labelme(const PageAnnotation& page) {
  Json shapes = Json::array();
  for (const BBox& b : page.marginalia) {
    shapes.push_back({{"label", "marginalia"},
                      {"shape_type", "rectangle"},
                      {"points", Json::array({Json::array({b.x, b.y}), Json::array({b.right(), b.bottom()})})}});
  }
  Json doc{{"version", "5.0.1"},
           {"imagePath", page.image_path},
           {"imageWidth", page.width},
           {"imageHeight", page.height},
           {"imageData", nullptr},
           {"shapes", shapes}};
  return doc.dump(2);
}

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw InputError("split must be \"train\" or \"test\"");
}

std::size_t train_count(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
}

CorpusSplit split_corpus(std::span<const PageAnnotation> pages, double ratio, std::uint64_t seed) {
  if (pages.empty()) throw std::invalid_argument("split_corpus: empty corpus");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split_corpus: ratio must be in (0, 1)");
  std::vector<std::string> ids;
  ids.reserve(pages.size());
  for (const auto& p : pages) ids.push_back(p.page_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw InputError("split_corpus: duplicate page_id");
  }
  CounterRng rng(derive_seed(seed, "split"));
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    std::swap(ids[i], ids[rng.below(i + 1)]);
  }
  CorpusSplit split;
  split.seed = seed;
  split.ratio = ratio;
  const std::size_t n_train = std::min(train_count(ids.size(), ratio), ids.size());
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  return split;
}

std::vector<PageAnnotation> Manifest::pages() const {
  std::vector<PageAnnotation> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.page);
  return out;
}

std::optional<CorpusSplit> Manifest::split() const {
  if (records.empty() || !records.front().split) return std::nullopt;
  CorpusSplit s;
  if (header && header->contains("split_seed")) s.seed = header->at("split_seed").get<std::uint64_t>();
  if (header && header->contains("split_ratio")) s.ratio = header->at("split_ratio").get<double>();
  for (const auto& r : records) {
    if (!r.split) return std::nullopt;
    (*r.split == Split::train ? s.train : s.test).push_back(r.page.page_id);
  }
  return s;
}

Json to_json(const ManifestRecord& r) {
  Json boxes = Json::array();
  for (const BBox& b : r.page.marginalia) boxes.push_back(box_to_json(b));
  Json j{{"page_id", r.page.page_id},
         {"image_path", r.page.image_path},
         {"width", r.page.width},
         {"height", r.page.height},
         {"boxes", boxes}};
  if (r.split) j["split"] = to_string(*r.split);
  return j;
}

ManifestRecord manifest_record_from_json(const Json& j) {
  ManifestRecord r;
  auto field = [&](const char* key) -> const Json& {
    if (!j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
    return j.at(key);
  };
  try {
    r.page.page_id = field("page_id").get<std::string>();
    r.page.image_path = field("image_path").get<std::string>();
    r.page.width = field("width").get<int>();
    r.page.height = field("height").get<int>();
    const Json& boxes = field("boxes");
    if (!boxes.is_array()) throw InputError("'boxes' must be an array");
    for (const Json& b : boxes) {
      BBox box = box_from_json(b);
      if (!box.fits(r.page.width, r.page.height)) throw InputError("box outside page bounds");
      r.page.marginalia.push_back(box);
    }
    if (j.contains("split") && !j.at("split").is_null()) {
      r.split = split_from_string(j.at("split").get<std::string>());
    }
  } catch (const Json::type_error& e) {
    throw InputError(std::string("wrong field type: ") + e.what());
  }
  if (r.page.page_id.empty()) throw InputError("empty page_id");
  if (r.page.width < 1 || r.page.height < 1) throw InputError("page size must be positive");
  return r;
}

void write_manifest(const CorpusSplit& split, std::span<const PageAnnotation> pages,
                    const std::filesystem::path& path, const std::optional<Json>& header) {
  std::unordered_map<std::string, Split> membership;
  for (const auto& id : split.train) membership.emplace(id, Split::train);
  for (const auto& id : split.test) membership.emplace(id, Split::test);
  std::vector<Json> rows;
  rows.reserve(pages.size());
  for (const auto& p : pages) {
    auto it = membership.find(p.page_id);
    if (it == membership.end()) throw InvariantViolation("page '" + p.page_id + "' missing from split");
    rows.push_back(to_json(ManifestRecord{p, it->second}));
  }
  write_jsonl(path, rows, header);
}

void write_manifest(std::span<const PageAnnotation> pages, const std::filesystem::path& path,
                    const std::optional<Json>& header) {
  std::vector<Json> rows;
  rows.reserve(pages.size());
  for (const auto& p : pages) rows.push_back(to_json(ManifestRecord{p, std::nullopt}));
  write_jsonl(path, rows, header);
}

Manifest read_manifest(const std::filesystem::path& path) {
  JsonlDocument doc = read_jsonl(path);
  Manifest m;
  m.header = doc.header;
  std::unordered_set<std::string> seen;
  for (const JsonLine& line : doc.records) {
    ManifestRecord r;
    try {
      r = manifest_record_from_json(line.value);
    } catch (const InputError& e) {
      throw InputError(line_context(path.string(), line.line_no, e.what()));
    }
    if (!seen.insert(r.page.page_id).second) {
      throw InputError(line_context(path.string(), line.line_no, "duplicate page_id '" + r.page.page_id + "'"));
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

}  // namespace marginalia
