#include "marginalia/recognizer.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "marginalia/errors.hpp"
#include "marginalia/image_io.hpp"
#include "marginalia/jsonl.hpp"
#include "marginalia/random.hpp"

namespace marginalia {

namespace fs = std::filesystem;

const WordCropEntry* WordCropManifest::find(std::string_view crop_id) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), crop_id,
                             [](const WordCropEntry& e, std::string_view id) { return e.crop_id < id; });
  if (it == entries.end() || it->crop_id != crop_id) return nullptr;
  return &*it;
}

std::string crop_id_for(std::string_view page_id, int detection, int line, int word) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "_%03d_%03d_%03d", detection, line, word);
  return std::string(page_id) + buf;
}

WordCropManifest export_word_crops(std::span<const CropSegmentation> crops, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create '" + dir.string() + "': " + ec.message());
  WordCropManifest manifest;
  for (const CropSegmentation& crop : crops) {
    const auto& lines = crop.segmentation.lines;
    for (std::size_t l = 0; l < lines.size(); ++l) {
      for (std::size_t w = 0; w < lines[l].words.size(); ++w) {
        WordCropEntry e;
        e.page_id = crop.page_id;
        e.detection_index = crop.detection_index;
        e.line_index = static_cast<int>(l);
        e.word_index = static_cast<int>(w);
        e.crop_id = crop_id_for(crop.page_id, e.detection_index, e.line_index, e.word_index);
        e.image_path = e.crop_id + ".png";
        write_png(dir / e.image_path, lines[l].words[w].image);
        manifest.entries.push_back(std::move(e));
      }
    }
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const WordCropEntry& a, const WordCropEntry& b) { return a.crop_id < b.crop_id; });
  if (std::adjacent_find(manifest.entries.begin(), manifest.entries.end(), [](const auto& a, const auto& b) {
        return a.crop_id == b.crop_id;
      }) != manifest.entries.end()) {
    throw InputError("duplicate word crop id; (page, detection) pairs must be unique");
  }
  write_word_crop_manifest(dir / kWordCropManifestName, manifest);
  return manifest;
}

void write_word_crop_manifest(const fs::path& path, const WordCropManifest& manifest) {
  std::vector<Json> rows;
  for (const WordCropEntry& e : manifest.entries) {
    rows.push_back({{"crop_id", e.crop_id},
                    {"image_path", e.image_path},
                    {"page_id", e.page_id},
                    {"detection_index", e.detection_index},
                    {"line_index", e.line_index},
                    {"word_index", e.word_index}});
  }
  write_jsonl(path, rows);
}

WordCropManifest read_word_crop_manifest(const fs::path& path) {
  const JsonlDocument doc = read_jsonl(path);
  WordCropManifest m;
  for (const JsonLine& line : doc.records) {
    try {
      const Json& j = line.value;
      WordCropEntry e;
      e.crop_id = j.at("crop_id").get<std::string>();
      e.image_path = j.at("image_path").get<std::string>();
      e.page_id = j.at("page_id").get<std::string>();
      e.detection_index = j.at("detection_index").get<int>();
      e.line_index = j.at("line_index").get<int>();
      e.word_index = j.at("word_index").get<int>();
      m.entries.push_back(std::move(e));
    } catch (const Json::exception& e) {
      throw InputError(line_context(path.string(), line.line_no, e.what()));
    }
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const WordCropEntry& a, const WordCropEntry& b) { return a.crop_id < b.crop_id; });
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    if (m.entries[i].crop_id == m.entries[i - 1].crop_id) {
      throw InputError(path.string() + ": duplicate crop_id '" + m.entries[i].crop_id + "'");
    }
  }
  return m;
}

RecognitionImport import_recognitions(const fs::path& path, const WordCropManifest& manifest) {
  RecognitionImport out;
  const JsonlDocument doc = read_jsonl(path);
  std::unordered_map<std::string, RecognitionResult> latest;
  for (const JsonLine& line : doc.records) {
    auto reject = [&](const std::string& msg) { out.errors.push_back(line_context(path.string(), line.line_no, msg)); };
    RecognitionResult r;
    try {
      r.crop_id = line.value.at("crop_id").get<std::string>();
      r.text = line.value.at("text").get<std::string>();
      r.confidence = line.value.at("confidence").get<double>();
    } catch (const Json::exception& e) {
      reject(std::string("bad record: ") + e.what());
      continue;
    }
    if (!manifest.find(r.crop_id)) {
      reject("unknown crop_id '" + r.crop_id + "'");
      continue;
    }
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
      reject("confidence outside [0, 1]");
      continue;
    }
    if (latest.contains(r.crop_id)) {
      out.warnings.push_back(line_context(path.string(), line.line_no,
                                          "duplicate crop_id '" + r.crop_id + "', later result kept"));
    }
    latest[r.crop_id] = std::move(r);
  }
  for (const WordCropEntry& e : manifest.entries) {
    auto it = latest.find(e.crop_id);
    if (it == latest.end()) {
      out.unrecognized.push_back(e.crop_id);
    } else {
      out.results.push_back(it->second);
    }
  }
  return out;
}

void write_recognitions(const fs::path& path, std::span<const RecognitionResult> results) {
  std::vector<Json> rows;
  for (const RecognitionResult& r : results) {
    rows.push_back({{"crop_id", r.crop_id}, {"text", r.text}, {"confidence", r.confidence}});
  }
  write_jsonl(path, rows);
}

std::vector<RecognitionResult> mock_recognizer(const WordCropManifest& manifest, std::span<const std::string> lexicon,
                                               std::uint64_t seed) {
  if (lexicon.empty()) throw std::invalid_argument("mock_recognizer: empty lexicon");
  std::vector<RecognitionResult> out;
  out.reserve(manifest.entries.size());
  for (const WordCropEntry& e : manifest.entries) {
    CounterRng rng(derive_seed(seed, e.crop_id));
    const std::string& word = lexicon[rng.below(lexicon.size())];
    out.push_back({e.crop_id, word, rng.uniform()});
  }
  return out;
}

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      extra = 1;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3;
      cp = b0 & 0x07;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + static_cast<std::size_t>(extra) >= s.size()) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  const std::u32string x = decode_utf8(a);
  const std::u32string y = decode_utf8(b);
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

namespace {

std::string ascii_lower(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

}  // namespace

WordScore word_accuracy(std::span<const RecognitionResult> results, const std::map<std::string, std::string>& truth,
                        bool case_sensitive) {
  WordScore score;
  std::map<std::string, const RecognitionResult*> by_id;
  for (const RecognitionResult& r : results) by_id[r.crop_id] = &r;
  std::size_t missing_truth = 0;
  for (const auto& [id, r] : by_id) {
    if (!truth.contains(id)) ++missing_truth;
  }
  std::size_t missing_result = 0;
  std::size_t correct = 0, edits = 0, ref_len = 0;
  for (const auto& [id, reference] : truth) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      ++missing_result;
      continue;
    }
    WordScoreRow row;
    row.crop_id = id;
    row.reference = reference;
    row.predicted = it->second->text;
    const std::string ref_cmp = case_sensitive ? reference : ascii_lower(reference);
    const std::string pred_cmp = case_sensitive ? row.predicted : ascii_lower(row.predicted);
    row.correct = ref_cmp == pred_cmp;
    row.distance = edit_distance(pred_cmp, ref_cmp);
    row.reference_length = decode_utf8(ref_cmp).size();
    correct += row.correct ? 1 : 0;
    edits += row.distance;
    ref_len += row.reference_length;
    score.rows.push_back(std::move(row));
  }
  if (missing_truth > 0) score.warnings.push_back(std::to_string(missing_truth) + " results have no reference word");
  if (missing_result > 0) score.warnings.push_back(std::to_string(missing_result) + " reference words have no result");
  if (!score.rows.empty()) score.accuracy = static_cast<double>(correct) / static_cast<double>(score.rows.size());
  if (ref_len > 0) score.cer = static_cast<double>(edits) / static_cast<double>(ref_len);
  return score;
}

}  // namespace marginalia
