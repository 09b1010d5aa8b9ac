#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "marginalia/geometry.hpp"
#include "marginalia/jsonl.hpp"

namespace marginalia {

/// One scanned page and its ground-truth marginalia boxes.
struct PageAnnotation {
  std::string page_id;
  std::string image_path;
  int width = 0;
  int height = 0;
  std::vector<BBox> marginalia;

  friend bool operator==(const PageAnnotation&, const PageAnnotation&) = default;
};

struct LabelmeParse {
  PageAnnotation page;
  std::vector<std::string> warnings;
};

/// True when `label` contains "marginalia", ignoring ASCII case.
bool is_marginalia_label(std::string_view label);

/// Parse one LabelMe JSON document. Every shape with a marginalia label
/// becomes its bounding box, with points clamped to the image and corners
/// rounded half-up. page_id is the stem of imagePath. Missing keys raise
/// InputError naming the key; zero-area shapes are dropped with a warning.
LabelmeParse parse_labelme(std::string_view document);

/// Inverse of parse_labelme on the retained fields (rectangles labelled
/// "marginalia").
std::string to_labelme(const PageAnnotation& page);

enum class Split { train, test };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  double ratio = 0.9;
};

/// round(ratio * n), half-up.
std::size_t train_count(std::size_t n, double ratio);

/// Seeded shuffle of the page ids (sorted first, so input order does not
/// matter) and cut at train_count. Throws std::invalid_argument for an
/// empty corpus or ratio outside (0, 1), InputError for duplicate ids.
CorpusSplit split_corpus(std::span<const PageAnnotation> pages, double ratio, std::uint64_t seed);

struct ManifestRecord {
  PageAnnotation page;
  std::optional<Split> split;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct Manifest {
  std::optional<Json> header;
  std::vector<ManifestRecord> records;

  std::vector<PageAnnotation> pages() const;
  std::optional<CorpusSplit> split() const;
};

Json to_json(const ManifestRecord& r);
ManifestRecord manifest_record_from_json(const Json& j);

/// Pages in input order, tagged with their split membership.
void write_manifest(const CorpusSplit& split, std::span<const PageAnnotation> pages,
                    const std::filesystem::path& path, const std::optional<Json>& header = std::nullopt);
/// Pages without a split assignment (ingest stage).
void write_manifest(std::span<const PageAnnotation> pages, const std::filesystem::path& path,
                    const std::optional<Json>& header = std::nullopt);

/// Errors carry file and line number; duplicate page ids are rejected.
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace marginalia
