#include "marginalia/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "marginalia/errors.hpp"

namespace marginalia {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw InputError("config: bad value '" + std::string(text) + "' for " + std::string(key));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InputError("config: bad boolean '" + std::string(text) + "' for " + std::string(key));
}

using Setter = std::function<void(PipelineConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"paths.corpus_dir", [](auto& c, auto, auto v) { c.corpus_dir = v; }},
      {"paths.work_dir", [](auto& c, auto, auto v) { c.work_dir = v; }},
      {"jobs", [](auto& c, auto k, auto v) { c.jobs = parse_number<int>(k, v); }},
      {"rescale.width", [](auto& c, auto k, auto v) { c.rescale_width = parse_number<int>(k, v); }},
      {"rescale.height", [](auto& c, auto k, auto v) { c.rescale_height = parse_number<int>(k, v); }},
      {"split.ratio", [](auto& c, auto k, auto v) { c.split_ratio = parse_number<double>(k, v); }},
      {"seed", [](auto& c, auto k, auto v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"augment.noise_sigma", [](auto& c, auto k, auto v) { c.augment.noise_sigma = parse_number<double>(k, v); }},
      {"augment.alpha_min", [](auto& c, auto k, auto v) { c.augment.alpha_min = parse_number<double>(k, v); }},
      {"augment.alpha_max", [](auto& c, auto k, auto v) { c.augment.alpha_max = parse_number<double>(k, v); }},
      {"augment.beta_min", [](auto& c, auto k, auto v) { c.augment.beta_min = parse_number<double>(k, v); }},
      {"augment.beta_max", [](auto& c, auto k, auto v) { c.augment.beta_max = parse_number<double>(k, v); }},
      {"mser.delta", [](auto& c, auto k, auto v) { c.proposals.mser.delta = parse_number<int>(k, v); }},
      {"mser.max_variation",
       [](auto& c, auto k, auto v) { c.proposals.mser.max_variation = parse_number<double>(k, v); }},
      {"mser.min_area", [](auto& c, auto k, auto v) { c.proposals.mser.min_area = parse_number<std::int64_t>(k, v); }},
      {"mser.max_area", [](auto& c, auto k, auto v) { c.proposals.mser.max_area = parse_number<std::int64_t>(k, v); }},
      {"mser.nested_area_ratio",
       [](auto& c, auto k, auto v) { c.proposals.mser.nested_area_ratio = parse_number<double>(k, v); }},
      {"mser.tiny_min_area",
       [](auto& c, auto k, auto v) { c.proposals.tiny_min_area = parse_number<std::int64_t>(k, v); }},
      {"mser.dedup_iou", [](auto& c, auto k, auto v) { c.proposals.dedup_iou = parse_number<double>(k, v); }},
      {"samples.n_negatives", [](auto& c, auto k, auto v) { c.n_negatives = parse_number<std::size_t>(k, v); }},
      {"samples.roi_size", [](auto& c, auto k, auto v) { c.roi_size = parse_number<int>(k, v); }},
      {"segment.use_detections", [](auto& c, auto k, auto v) { c.segment_use_detections = parse_bool(k, v); }},
      {"eval.iou_threshold", [](auto& c, auto k, auto v) { c.eval_iou_threshold = parse_number<double>(k, v); }},
  };
  return table;
}

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw InputError("config: " + msg); };
  if (jobs < 1) fail("jobs must be >= 1");
  if (rescale_width < 1 || rescale_height < 1) fail("rescale size must be >= 1");
  if (!(split_ratio > 0 && split_ratio < 1)) fail("split.ratio must be in (0, 1)");
  if (augment.noise_sigma < 0) fail("augment.noise_sigma must be >= 0");
  if (!(augment.alpha_min > 0) || augment.alpha_max < augment.alpha_min) fail("augment alpha range invalid");
  if (augment.beta_max < augment.beta_min) fail("augment beta range invalid");
  try {
    proposals.mser.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (proposals.tiny_min_area < 0) fail("mser.tiny_min_area must be >= 0");
  if (!(proposals.dedup_iou > 0 && proposals.dedup_iou <= 1)) fail("mser.dedup_iou must be in (0, 1]");
  if (roi_size < 1) fail("samples.roi_size must be >= 1");
  if (!(eval_iou_threshold >= 0 && eval_iou_threshold <= 1)) fail("eval.iou_threshold must be in [0, 1]");
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw InputError("config: unknown key '" + std::string(key) + "'");
  it->second(*this, key, value);
}

std::vector<std::string> PipelineConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : setters()) out.push_back(k);
  return out;
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError("config:" + std::to_string(line_no) + ": unterminated section");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config:" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    try {
      base.set(key, value);
    } catch (const InputError& e) {
      throw InputError("config:" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

Json to_json(const PipelineConfig& c) {
  // paths and jobs do not affect outputs and are left out, so headers
  // stay byte-identical across work directories and thread counts
  return Json{
      {"rescale", {{"width", c.rescale_width}, {"height", c.rescale_height}}},
      {"split", {{"ratio", c.split_ratio}}},
      {"seed", c.seed},
      {"augment",
       {{"noise_sigma", c.augment.noise_sigma},
        {"alpha_min", c.augment.alpha_min},
        {"alpha_max", c.augment.alpha_max},
        {"beta_min", c.augment.beta_min},
        {"beta_max", c.augment.beta_max}}},
      {"mser",
       {{"delta", c.proposals.mser.delta},
        {"max_variation", c.proposals.mser.max_variation},
        {"min_area", c.proposals.mser.min_area},
        {"max_area", c.proposals.mser.max_area},
        {"nested_area_ratio", c.proposals.mser.nested_area_ratio},
        {"tiny_min_area", c.proposals.tiny_min_area},
        {"dedup_iou", c.proposals.dedup_iou}}},
      {"samples", {{"n_negatives", c.n_negatives}, {"roi_size", c.roi_size}}},
      {"segment", {{"use_detections", c.segment_use_detections}}},
      {"eval", {{"iou_threshold", c.eval_iou_threshold}}},
  };
}

}  // namespace marginalia
