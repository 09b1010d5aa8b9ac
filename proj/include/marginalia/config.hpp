#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "marginalia/augment.hpp"
#include "marginalia/jsonl.hpp"
#include "marginalia/mser.hpp"

namespace marginalia {

struct PipelineConfig {
  std::string corpus_dir;
  std::string work_dir = "work";
  int jobs = 1;

  int rescale_width = 350;
  int rescale_height = 500;

  double split_ratio = 0.9;
  std::uint64_t seed = 513;

  AugmentParams augment;
  ProposalParams proposals;

  std::size_t n_negatives = 4;
  int roi_size = 227;

  bool segment_use_detections = true;  // fall back to ground truth when no detections file

  double eval_iou_threshold = 0.5;

  /// Throws InputError naming the first out-of-range field.
  void validate() const;

  /// Set one dotted key, e.g. "mser.delta" = "3". Unknown keys and
  /// unparsable values raise InputError.
  void set(std::string_view key, std::string_view value);

  /// Every key `set` accepts.
  static std::vector<std::string> keys();
};

/// `key = value` lines, `[section]` headers prefixing keys with
/// "section.", `#` comments, values bare or double-quoted.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

Json to_json(const PipelineConfig& config);

}  // namespace marginalia
