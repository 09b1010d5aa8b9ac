#include "marginalia/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "marginalia/errors.hpp"

namespace marginalia {

std::string line_context(const std::string& source, std::size_t line_no, const std::string& msg) {
  return source + ":" + std::to_string(line_no) + ": " + msg;
}

JsonlDocument parse_jsonl(const std::string& text, const std::string& source) {
  JsonlDocument doc;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json value;
    try {
      value = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw InputError(line_context(source, line_no, "malformed JSON"));
    }
    if (!value.is_object()) throw InputError(line_context(source, line_no, "expected a JSON object"));
    if (value.contains(kHeaderKey)) {
      if (doc.header || !doc.records.empty()) {
        throw InputError(line_context(source, line_no, "header must be the first record"));
      }
      doc.header = value.at(kHeaderKey);
      continue;
    }
    doc.records.push_back({line_no, std::move(value)});
  }
  return doc;
}

JsonlDocument read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str(), path.string());
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records,
                 const std::optional<Json>& header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  if (header) out << Json{{kHeaderKey, *header}}.dump() << '\n';
  for (const Json& r : records) out << r.dump() << '\n';
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

Json box_to_json(const BBox& b) { return Json::array({b.x, b.y, b.w, b.h}); }

BBox box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw InputError("box must be [x, y, w, h]");
  for (const Json& v : j) {
    if (!v.is_number_integer()) throw InputError("box coordinates must be integers");
  }
  BBox b{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  if (!b.valid()) throw InputError("box must have x, y >= 0 and w, h > 0");
  return b;
}

}  // namespace marginalia
