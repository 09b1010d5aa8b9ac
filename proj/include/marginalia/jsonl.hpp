#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "marginalia/geometry.hpp"

namespace marginalia {

using Json = nlohmann::json;

/// Key of the optional provenance line at the top of a manifest.
inline constexpr const char* kHeaderKey = "_header";

struct JsonLine {
  std::size_t line_no = 0;  // 1-based
  Json value;
};

struct JsonlDocument {
  std::optional<Json> header;
  std::vector<JsonLine> records;
};

/// Parse line-delimited JSON. Blank lines are skipped; a first record of
/// the form {"_header": ...} is split off. Malformed lines raise
/// InputError naming the file and line number.
JsonlDocument read_jsonl(const std::filesystem::path& path);
JsonlDocument parse_jsonl(const std::string& text, const std::string& source = "<memory>");

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records,
                 const std::optional<Json>& header = std::nullopt);

Json box_to_json(const BBox& b);

/// [x, y, w, h] with w, h > 0. Throws InputError otherwise.
BBox box_from_json(const Json& j);

/// "file:line: message"
std::string line_context(const std::string& source, std::size_t line_no, const std::string& msg);

}  // namespace marginalia
