#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "marginalia/config.hpp"

namespace marginalia {

/// Stage outputs, relative to the work directory.
namespace files {
inline constexpr const char* kPages = "pages.jsonl";
inline constexpr const char* kSplit = "split.jsonl";
inline constexpr const char* kAugmented = "augmented.jsonl";
inline constexpr const char* kProposals = "proposals.jsonl";
inline constexpr const char* kSamples = "samples.jsonl";
inline constexpr const char* kSegmentation = "segmentation.jsonl";
inline constexpr const char* kWordsDir = "words";
inline constexpr const char* kRecognitions = "recognitions.jsonl";
inline constexpr const char* kEvalJson = "eval_report.json";
inline constexpr const char* kEvalText = "eval_report.txt";
inline constexpr const char* kWordScores = "word_scores.json";
inline constexpr const char* kOverlaysDir = "overlays";
}  // namespace files

struct StageResult {
  std::size_t records = 0;
  std::vector<std::string> warnings;
  std::string summary;
};

/// LabelMe JSON + images in corpus_dir -> rescaled pages and pages.jsonl.
/// Every failing file is listed in one InputError.
StageResult run_ingest(const PipelineConfig& cfg);

/// pages.jsonl -> split.jsonl
StageResult run_split(const PipelineConfig& cfg);

/// train pages of split.jsonl -> augmented images and augmented.jsonl
StageResult run_augment(const PipelineConfig& cfg);

/// augmented samples and test pages -> proposals.jsonl (optionally debug
/// overlays under proposal_overlays/)
StageResult run_proposals(const PipelineConfig& cfg, bool overlays = false);

/// augmented.jsonl + proposals.jsonl -> ROI images and samples.jsonl
StageResult run_samples(const PipelineConfig& cfg);

/// Test pages cropped by detections (or ground truth) -> word crops,
/// words/word_crops.jsonl and segmentation.jsonl
StageResult run_segment(const PipelineConfig& cfg, const std::optional<std::filesystem::path>& detections);

/// Imported detections scored against test-page ground truth.
StageResult run_eval(const PipelineConfig& cfg, const std::filesystem::path& detections);

/// words/word_crops.jsonl -> recognitions.jsonl from the mock recognizer.
StageResult run_recognize_mock(const PipelineConfig& cfg, const std::vector<std::string>& lexicon);

/// Recognition results scored against reference words
/// ({crop_id, text} per line).
StageResult run_score_words(const PipelineConfig& cfg, const std::filesystem::path& results,
                            const std::filesystem::path& truth);

/// Test pages with ground truth (green) and detections (red).
StageResult run_overlay(const PipelineConfig& cfg, const std::optional<std::filesystem::path>& detections);

/// Lexicon used by recognize-mock when none is given.
std::vector<std::string> default_lexicon();

}  // namespace marginalia
