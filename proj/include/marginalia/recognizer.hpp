#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "marginalia/geometry.hpp"
#include "marginalia/segment.hpp"

namespace marginalia {

struct WordCropEntry {
  std::string crop_id;
  std::string image_path;  // relative to the manifest's directory
  std::string page_id;
  int detection_index = 0;
  int line_index = 0;
  int word_index = 0;

  friend bool operator==(const WordCropEntry&, const WordCropEntry&) = default;
};

struct WordCropManifest {
  std::vector<WordCropEntry> entries;  // sorted by crop_id

  const WordCropEntry* find(std::string_view crop_id) const;
};

/// "<page>_<det>_<line>_<word>" with indices zero-padded to three digits,
/// so lexicographic order follows (page, det, line, word).
std::string crop_id_for(std::string_view page_id, int detection, int line, int word);

/// Segmentation of one detected (or ground-truth) marginalia crop.
struct CropSegmentation {
  std::string page_id;
  int detection_index = 0;
  BBox detection_box;
  Segmentation segmentation;
};

inline constexpr const char* kWordCropManifestName = "word_crops.jsonl";

/// Write one PNG per word and `word_crops.jsonl` into `dir`. Rewriting the
/// same segmentation produces identical files.
WordCropManifest export_word_crops(std::span<const CropSegmentation> crops, const std::filesystem::path& dir);

void write_word_crop_manifest(const std::filesystem::path& path, const WordCropManifest& manifest);
WordCropManifest read_word_crop_manifest(const std::filesystem::path& path);

struct RecognitionResult {
  std::string crop_id;
  std::string text;
  double confidence = 0.0;

  friend bool operator==(const RecognitionResult&, const RecognitionResult&) = default;
};

struct RecognitionImport {
  std::vector<RecognitionResult> results;  // manifest order
  std::vector<std::string> unrecognized;   // crop ids with no result
  std::vector<std::string> errors;         // rejected lines
  std::vector<std::string> warnings;       // duplicates (last one wins)
};

/// Line-delimited {crop_id, text, confidence}, joined against the manifest.
RecognitionImport import_recognitions(const std::filesystem::path& path, const WordCropManifest& manifest);

void write_recognitions(const std::filesystem::path& path, std::span<const RecognitionResult> results);

/// Stand-in recognizer: word and confidence are hashes of (crop_id, seed).
/// Throws std::invalid_argument for an empty lexicon.
std::vector<RecognitionResult> mock_recognizer(const WordCropManifest& manifest, std::span<const std::string> lexicon,
                                               std::uint64_t seed);

/// Code points of a UTF-8 string; malformed bytes decode as U+FFFD.
std::u32string decode_utf8(std::string_view s);

/// Levenshtein distance over code points.
std::size_t edit_distance(std::string_view a, std::string_view b);

struct WordScoreRow {
  std::string crop_id;
  std::string reference;
  std::string predicted;
  bool correct = false;
  std::size_t distance = 0;
  std::size_t reference_length = 0;
};

struct WordScore {
  std::optional<double> accuracy;  // exact-match rate
  std::optional<double> cer;       // total edits / total reference length
  std::vector<WordScoreRow> rows;
  std::vector<std::string> warnings;
};

/// Scored on the crop ids present in both inputs; mismatched id sets are
/// reported as warnings.
WordScore word_accuracy(std::span<const RecognitionResult> results, const std::map<std::string, std::string>& truth,
                        bool case_sensitive = true);

}  // namespace marginalia
