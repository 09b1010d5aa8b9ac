#include "marginalia/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "marginalia/augment.hpp"
#include "marginalia/dataset.hpp"
#include "marginalia/errors.hpp"
#include "marginalia/eval.hpp"
#include "marginalia/image_io.hpp"
#include "marginalia/mser.hpp"
#include "marginalia/random.hpp"
#include "marginalia/recognizer.hpp"
#include "marginalia/samples.hpp"
#include "marginalia/segment.hpp"

namespace marginalia {

namespace fs = std::filesystem;

namespace {

/// Runs fn(0..n-1) on up to `jobs` threads. Results must be written by
/// index; the first failure (by index) is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t extra = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs))) - (n > 0 ? 1 : 0);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < extra; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

fs::path work(const PipelineConfig& cfg) { return fs::path(cfg.work_dir); }

Json header_for(const PipelineConfig& cfg, const char* stage, Json extra = Json::object()) {
  Json h{{"stage", stage}, {"config", to_json(cfg)}};
  for (auto& [k, v] : extra.items()) h[k] = v;
  return h;
}

fs::path require_upstream(const PipelineConfig& cfg, const char* file, const char* stage) {
  const fs::path p = work(cfg) / file;
  if (!fs::exists(p)) {
    throw InputError("missing " + p.string() + ": run the `" + std::string(stage) + "` stage first");
  }
  return p;
}

/// Empty (or create) a stage-owned output directory.
fs::path fresh_dir(const fs::path& dir) {
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create '" + dir.string() + "': " + ec.message());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  out << text;
}

/// Evaluation pages: the test split when one exists, otherwise all pages.
std::vector<PageAnnotation> evaluation_pages(const PipelineConfig& cfg) {
  fs::path path = work(cfg) / files::kSplit;
  if (!fs::exists(path)) path = require_upstream(cfg, files::kPages, "ingest");
  const Manifest m = read_manifest(path);
  std::vector<PageAnnotation> out;
  for (const auto& r : m.records) {
    if (!r.split || *r.split == Split::test) out.push_back(r.page);
  }
  return out;
}

std::map<std::string, PageFrame> page_frames(const PipelineConfig& cfg) {
  fs::path path = work(cfg) / files::kSplit;
  if (!fs::exists(path)) path = require_upstream(cfg, files::kPages, "ingest");
  std::map<std::string, PageFrame> frames;
  for (const auto& r : read_manifest(path).records) frames[r.page.page_id] = {r.page.width, r.page.height};
  return frames;
}

DetectionImport load_detections(const PipelineConfig& cfg, const fs::path& detections) {
  DetectionImport imp = import_detections(detections, page_frames(cfg));
  if (!imp.errors.empty()) {
    std::string msg = std::to_string(imp.errors.size()) + " rejected detection line(s):";
    for (const auto& e : imp.errors) msg += "\n  " + e;
    throw InputError(msg);
  }
  return imp;
}

struct ImageRecord {
  std::string id;
  std::string image_path;
  std::vector<BBox> boxes;
};

std::vector<ImageRecord> read_augmented(const fs::path& path) {
  std::vector<ImageRecord> out;
  for (const JsonLine& line : read_jsonl(path).records) {
    try {
      ImageRecord r;
      r.id = line.value.at("sample_id").get<std::string>();
      r.image_path = line.value.at("image_path").get<std::string>();
      for (const Json& b : line.value.at("boxes")) r.boxes.push_back(box_from_json(b));
      out.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw InputError(line_context(path.string(), line.line_no, e.what()));
    } catch (const InputError& e) {
      throw InputError(line_context(path.string(), line.line_no, e.what()));
    }
  }
  return out;
}

}  // namespace

StageResult run_ingest(const PipelineConfig& cfg) {
  cfg.validate();
  const fs::path corpus(cfg.corpus_dir);
  if (cfg.corpus_dir.empty() || !fs::is_directory(corpus)) {
    throw InputError("corpus directory '" + cfg.corpus_dir + "' does not exist");
  }
  std::vector<fs::path> docs;
  for (const auto& entry : fs::directory_iterator(corpus)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") docs.push_back(entry.path());
  }
  std::sort(docs.begin(), docs.end());
  if (docs.empty()) throw InputError("no LabelMe .json files in '" + cfg.corpus_dir + "'");

  const fs::path out_dir = fresh_dir(work(cfg) / "pages");
  std::vector<PageAnnotation> pages(docs.size());
  std::vector<std::vector<std::string>> warnings(docs.size());
  std::vector<std::string> failures(docs.size());

  parallel_for(docs.size(), cfg.jobs, [&](std::size_t i) {
    try {
      LabelmeParse parsed = parse_labelme(read_text(docs[i]));
      std::string rel = parsed.page.image_path;
      std::replace(rel.begin(), rel.end(), '\\', '/');
      const Raster image = read_image(docs[i].parent_path() / rel);
      if (width_of(image) != parsed.page.width || height_of(image) != parsed.page.height) {
        throw InputError("image size " + std::to_string(width_of(image)) + "x" + std::to_string(height_of(image)) +
                         " does not match annotation");
      }
      auto [scaled, boxes] = rescale_page(image, parsed.page.marginalia, cfg.rescale_width, cfg.rescale_height);
      PageAnnotation page;
      page.page_id = parsed.page.page_id;
      page.image_path = "pages/" + page.page_id + ".png";
      page.width = cfg.rescale_width;
      page.height = cfg.rescale_height;
      page.marginalia = std::move(boxes);
      for (auto& w : parsed.warnings) warnings[i].push_back(docs[i].filename().string() + ": " + w);
      pages[i] = std::move(page);
      // written after all checks so a failed page leaves no image behind
      write_png(work(cfg) / pages[i].image_path, scaled);
    } catch (const std::exception& e) {
      failures[i] = docs[i].string() + ": " + e.what();
    }
  });

  std::string failed;
  std::size_t n_failed = 0;
  for (const auto& f : failures) {
    if (f.empty()) continue;
    failed += "\n  " + f;
    ++n_failed;
  }
  if (n_failed > 0) throw InputError(std::to_string(n_failed) + " file(s) failed to ingest:" + failed);

  std::set<std::string> ids;
  for (const auto& p : pages) {
    if (!ids.insert(p.page_id).second) throw InputError("duplicate page_id '" + p.page_id + "' in corpus");
  }
  StageResult res;
  for (auto& w : warnings) res.warnings.insert(res.warnings.end(), w.begin(), w.end());
  write_manifest(pages, work(cfg) / files::kPages, header_for(cfg, "ingest"));
  res.records = pages.size();
  res.summary = "ingested " + std::to_string(pages.size()) + " pages";
  return res;
}

StageResult run_split(const PipelineConfig& cfg) {
  cfg.validate();
  const Manifest m = read_manifest(require_upstream(cfg, files::kPages, "ingest"));
  const auto pages = m.pages();
  if (pages.empty()) throw InputError("pages manifest is empty");
  const CorpusSplit split = split_corpus(pages, cfg.split_ratio, cfg.seed);
  write_manifest(split, pages, work(cfg) / files::kSplit,
                 header_for(cfg, "split", {{"split_seed", split.seed}, {"split_ratio", split.ratio}}));
  StageResult res;
  res.records = pages.size();
  res.summary = std::to_string(split.train.size()) + " train / " + std::to_string(split.test.size()) + " test";
  return res;
}

StageResult run_augment(const PipelineConfig& cfg) {
  cfg.validate();
  const Manifest m = read_manifest(require_upstream(cfg, files::kSplit, "split"));
  std::vector<PageAnnotation> train;
  for (const auto& r : m.records) {
    if (r.split == Split::train) train.push_back(r.page);
  }
  const fs::path out_dir = fresh_dir(work(cfg) / "augmented");
  std::vector<std::array<Json, 4>> rows(train.size());
  parallel_for(train.size(), cfg.jobs, [&](std::size_t i) {
    const PageAnnotation& page = train[i];
    const Raster image = read_image(work(cfg) / page.image_path);
    const auto samples = augment_page(page.page_id, image, page.marginalia, cfg.seed, cfg.augment);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const AugmentedSample& s = samples[k];
      const std::string rel = "augmented/" + s.key() + ".png";
      write_png(work(cfg) / rel, s.image);
      Json boxes = Json::array();
      for (const BBox& b : s.boxes) boxes.push_back(box_to_json(b));
      rows[i][k] = Json{{"sample_id", s.key()},
                        {"source_page_id", s.source_page_id},
                        {"variant", to_string(s.variant)},
                        {"seed", s.seed},
                        {"alpha", s.alpha},
                        {"beta", s.beta},
                        {"image_path", rel},
                        {"width", width_of(s.image)},
                        {"height", height_of(s.image)},
                        {"boxes", boxes}};
    }
  });
  std::vector<Json> flat;
  for (auto& group : rows) flat.insert(flat.end(), group.begin(), group.end());
  if (flat.size() != 4 * train.size()) throw InvariantViolation("augmented set is not 4x the train split");
  write_jsonl(work(cfg) / files::kAugmented, flat,
              header_for(cfg, "augment", {{"train_pages", train.size()}, {"samples", flat.size()}}));
  StageResult res;
  res.records = flat.size();
  res.summary = std::to_string(train.size()) + " train pages -> " + std::to_string(flat.size()) + " samples";
  return res;
}

StageResult run_proposals(const PipelineConfig& cfg, bool overlays) {
  cfg.validate();
  std::vector<ImageRecord> targets =
      read_augmented(require_upstream(cfg, files::kAugmented, "augment"));
  for (const auto& page : evaluation_pages(cfg)) targets.push_back({page.page_id, page.image_path, page.marginalia});
  if (overlays) fresh_dir(work(cfg) / "proposal_overlays");

  std::vector<Json> rows(targets.size());
  parallel_for(targets.size(), cfg.jobs, [&](std::size_t i) {
    const Raster image = read_image(work(cfg) / targets[i].image_path);
    const auto props = proposals(image, cfg.proposals);
    Json boxes = Json::array(), scores = Json::array(), polarity = Json::array();
    std::vector<BBox> raw;
    for (const Proposal& p : props) {
      boxes.push_back(box_to_json(p.box));
      scores.push_back(p.score);
      polarity.push_back(to_string(p.polarity));
      raw.push_back(p.box);
    }
    rows[i] = Json{{"page_id", targets[i].id}, {"boxes", boxes}, {"scores", scores}, {"polarity", polarity}};
    if (overlays) {
      write_png(work(cfg) / "proposal_overlays" / (targets[i].id + ".png"), render_overlay(image, {}, raw));
    }
  });
  write_jsonl(work(cfg) / files::kProposals, rows, header_for(cfg, "proposals"));
  StageResult res;
  res.records = rows.size();
  std::size_t total = 0;
  for (const auto& r : rows) total += r.at("boxes").size();
  res.summary = std::to_string(total) + " proposals over " + std::to_string(rows.size()) + " images";
  return res;
}

StageResult run_samples(const PipelineConfig& cfg) {
  cfg.validate();
  const auto samples = read_augmented(require_upstream(cfg, files::kAugmented, "augment"));
  const fs::path prop_path = require_upstream(cfg, files::kProposals, "proposals");
  std::map<std::string, std::vector<BBox>> props;
  for (const JsonLine& line : read_jsonl(prop_path).records) {
    try {
      auto& v = props[line.value.at("page_id").get<std::string>()];
      for (const Json& b : line.value.at("boxes")) v.push_back(box_from_json(b));
    } catch (const std::exception& e) {
      throw InputError(line_context(prop_path.string(), line.line_no, e.what()));
    }
  }
  const fs::path out_dir = fresh_dir(work(cfg) / "samples");

  std::vector<std::vector<Json>> rows(samples.size());
  std::vector<std::vector<std::string>> warnings(samples.size());
  std::vector<std::array<std::size_t, 2>> counts(samples.size());
  parallel_for(samples.size(), cfg.jobs, [&](std::size_t i) {
    const ImageRecord& s = samples[i];
    auto it = props.find(s.id);
    if (it == props.end()) throw InputError("no proposals for '" + s.id + "': rerun `proposals`");
    const Raster image = read_image(work(cfg) / s.image_path);
    auto emit = [&](const RoiSample& roi, const std::string& tag, std::size_t index) {
      if (width_of(roi.image) != cfg.roi_size || height_of(roi.image) != cfg.roi_size) {
        throw InvariantViolation("ROI is not roi_size x roi_size");
      }
      char suffix[48];
      std::snprintf(suffix, sizeof suffix, "_%s%02zu_t%d", tag.c_str(), index, roi.tile_index);
      const std::string id = s.id + suffix;
      const std::string rel = "samples/" + id + ".png";
      write_png(work(cfg) / rel, roi.image);
      rows[i].push_back(Json{{"sample_id", id},
                             {"page_id", s.id},
                             {"label", to_string(roi.label)},
                             {"source_box", box_to_json(roi.source_box)},
                             {"tile_index", roi.tile_index},
                             {"image_path", rel}});
    };
    const auto pos = positive_rois(s.id, image, s.boxes, cfg.roi_size);
    for (const RoiSample& roi : pos) {
      const auto gt_index = static_cast<std::size_t>(std::find(s.boxes.begin(), s.boxes.end(), roi.source_box) -
                                                     s.boxes.begin());
      emit(roi, "pos", gt_index);
    }
    const auto neg = negative_rois(s.id, image, s.boxes, it->second, cfg.n_negatives,
                                   derive_seed(cfg.seed, "negatives/" + s.id), cfg.roi_size);
    std::size_t neg_index = 0;
    BBox last{};
    for (std::size_t k = 0; k < neg.samples.size(); ++k) {
      if (k > 0 && !(neg.samples[k].source_box == last)) ++neg_index;
      last = neg.samples[k].source_box;
      emit(neg.samples[k], "neg", neg_index);
    }
    counts[i] = {pos.size(), neg.samples.size()};
    warnings[i] = neg.warnings;
  });

  std::vector<Json> flat;
  std::size_t n_pos = 0, n_neg = 0;
  StageResult res;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
    n_pos += counts[i][0];
    n_neg += counts[i][1];
    res.warnings.insert(res.warnings.end(), warnings[i].begin(), warnings[i].end());
  }
  write_jsonl(work(cfg) / files::kSamples, flat,
              header_for(cfg, "samples",
                         {{"marginalia", n_pos}, {"non_marginalia", n_neg}, {"shortfall_warnings", res.warnings}}));
  res.records = flat.size();
  res.summary = std::to_string(n_pos) + " marginalia + " + std::to_string(n_neg) + " non-marginalia ROIs";
  return res;
}

StageResult run_segment(const PipelineConfig& cfg, const std::optional<fs::path>& detections) {
  cfg.validate();
  const auto pages = evaluation_pages(cfg);
  std::optional<DetectionImport> imported;
  if (detections && cfg.segment_use_detections) imported = load_detections(cfg, *detections);

  std::vector<std::vector<CropSegmentation>> per_page(pages.size());
  parallel_for(pages.size(), cfg.jobs, [&](std::size_t i) {
    const PageAnnotation& page = pages[i];
    std::vector<BBox> boxes;
    if (imported) {
      if (auto it = imported->by_page.find(page.page_id); it != imported->by_page.end()) {
        for (const Detection& d : it->second) boxes.push_back(d.box);
      }
    } else {
      boxes = page.marginalia;
    }
    if (boxes.empty()) return;
    const Raster image = read_image(work(cfg) / page.image_path);
    for (std::size_t d = 0; d < boxes.size(); ++d) {
      per_page[i].push_back({page.page_id, static_cast<int>(d), boxes[d], segment_marginalia(crop(image, boxes[d]))});
    }
  });

  std::vector<CropSegmentation> all;
  StageResult res;
  for (auto& group : per_page) {
    for (auto& c : group) {
      for (const auto& diag : c.segmentation.diagnostics) {
        res.warnings.push_back(c.page_id + " detection " + std::to_string(c.detection_index) + ": " + diag);
      }
      all.push_back(std::move(c));
    }
  }
  const fs::path words_dir = fresh_dir(work(cfg) / files::kWordsDir);
  const WordCropManifest manifest = export_word_crops(all, words_dir);

  std::vector<Json> rows;
  for (const CropSegmentation& c : all) {
    for (std::size_t l = 0; l < c.segmentation.lines.size(); ++l) {
      const auto& line = c.segmentation.lines[l];
      for (std::size_t w = 0; w < line.words.size(); ++w) {
        rows.push_back(Json{{"crop_id", crop_id_for(c.page_id, c.detection_index, static_cast<int>(l),
                                                    static_cast<int>(w))},
                            {"page_id", c.page_id},
                            {"detection_index", c.detection_index},
                            {"detection_box", box_to_json(c.detection_box)},
                            {"line_index", l},
                            {"line_rows", Json::array({line.rows.begin, line.rows.end})},
                            {"word_index", w},
                            {"word_cols", Json::array({line.words[w].cols.begin, line.words[w].cols.end})}});
      }
    }
  }
  write_jsonl(work(cfg) / files::kSegmentation, rows,
              header_for(cfg, "segment", {{"source", imported ? "detections" : "ground_truth"},
                                          {"crops", all.size()},
                                          {"diagnostics", res.warnings}}));
  res.records = manifest.entries.size();
  res.summary = std::to_string(all.size()) + " crops -> " + std::to_string(manifest.entries.size()) + " word crops";
  return res;
}

StageResult run_eval(const PipelineConfig& cfg, const fs::path& detections) {
  cfg.validate();
  const DetectionImport imp = load_detections(cfg, detections);
  std::vector<PageTruth> truth;
  std::set<std::string> evaluated;
  for (const auto& p : evaluation_pages(cfg)) {
    truth.push_back({p.page_id, p.marginalia});
    evaluated.insert(p.page_id);
  }
  std::size_t ignored = 0;
  for (const auto& [page_id, dets] : imp.by_page) {
    if (!evaluated.contains(page_id)) ignored += dets.size();
  }
  const EvalReport report = evaluate(truth, imp.by_page, cfg.eval_iou_threshold);
  ensure_dir(work(cfg));
  Json j = to_json(report);
  j["config"] = to_json(cfg);
  write_text(work(cfg) / files::kEvalJson, j.dump(2) + "\n");
  const std::string table = format_report(report);
  write_text(work(cfg) / files::kEvalText, table);
  StageResult res;
  res.records = report.pages.size();
  res.summary = table;
  if (report.mean.diagnostic) res.warnings.push_back(*report.mean.diagnostic);
  if (ignored > 0) res.warnings.push_back(std::to_string(ignored) + " detection(s) on pages outside the test split ignored");
  return res;
}

StageResult run_recognize_mock(const PipelineConfig& cfg, const std::vector<std::string>& lexicon) {
  cfg.validate();
  const fs::path manifest_path = work(cfg) / files::kWordsDir / kWordCropManifestName;
  if (!fs::exists(manifest_path)) throw InputError("missing " + manifest_path.string() + ": run the `segment` stage first");
  const WordCropManifest manifest = read_word_crop_manifest(manifest_path);
  if (lexicon.empty()) throw InputError("recognize-mock: empty lexicon");
  const auto results = mock_recognizer(manifest, lexicon, cfg.seed);
  write_recognitions(work(cfg) / files::kRecognitions, results);
  StageResult res;
  res.records = results.size();
  res.summary = std::to_string(results.size()) + " mock recognitions";
  return res;
}

StageResult run_score_words(const PipelineConfig& cfg, const fs::path& results, const fs::path& truth) {
  cfg.validate();
  const fs::path manifest_path = work(cfg) / files::kWordsDir / kWordCropManifestName;
  if (!fs::exists(manifest_path)) throw InputError("missing " + manifest_path.string() + ": run the `segment` stage first");
  const WordCropManifest manifest = read_word_crop_manifest(manifest_path);
  const RecognitionImport imp = import_recognitions(results, manifest);
  if (!imp.errors.empty()) {
    std::string msg = std::to_string(imp.errors.size()) + " rejected recognition line(s):";
    for (const auto& e : imp.errors) msg += "\n  " + e;
    throw InputError(msg);
  }
  std::map<std::string, std::string> refs;
  for (const JsonLine& line : read_jsonl(truth).records) {
    try {
      refs[line.value.at("crop_id").get<std::string>()] = line.value.at("text").get<std::string>();
    } catch (const Json::exception& e) {
      throw InputError(line_context(truth.string(), line.line_no, e.what()));
    }
  }
  const WordScore score = word_accuracy(imp.results, refs);
  Json rows = Json::array();
  for (const auto& r : score.rows) {
    rows.push_back({{"crop_id", r.crop_id},
                    {"reference", r.reference},
                    {"predicted", r.predicted},
                    {"correct", r.correct},
                    {"distance", r.distance}});
  }
  Json out{{"accuracy", score.accuracy ? Json(*score.accuracy) : Json(nullptr)},
           {"cer", score.cer ? Json(*score.cer) : Json(nullptr)},
           {"evaluated", score.rows.size()},
           {"unrecognized", imp.unrecognized},
           {"warnings", score.warnings},
           {"rows", rows}};
  ensure_dir(work(cfg));
  write_text(work(cfg) / files::kWordScores, out.dump(2) + "\n");
  StageResult res;
  res.records = score.rows.size();
  res.warnings = imp.warnings;
  res.warnings.insert(res.warnings.end(), score.warnings.begin(), score.warnings.end());
  std::ostringstream summary;
  summary << "words scored: " << score.rows.size();
  if (score.accuracy) summary << ", accuracy " << *score.accuracy;
  if (score.cer) summary << ", CER " << *score.cer;
  res.summary = summary.str();
  return res;
}

StageResult run_overlay(const PipelineConfig& cfg, const std::optional<fs::path>& detections) {
  cfg.validate();
  const auto pages = evaluation_pages(cfg);
  std::optional<DetectionImport> imported;
  if (detections) imported = load_detections(cfg, *detections);
  fresh_dir(work(cfg) / files::kOverlaysDir);
  parallel_for(pages.size(), cfg.jobs, [&](std::size_t i) {
    const PageAnnotation& page = pages[i];
    std::vector<BBox> preds;
    if (imported) {
      if (auto it = imported->by_page.find(page.page_id); it != imported->by_page.end()) {
        for (const Detection& d : it->second) preds.push_back(d.box);
      }
    }
    const Raster image = read_image(work(cfg) / page.image_path);
    write_png(work(cfg) / files::kOverlaysDir / (page.page_id + ".png"), render_overlay(image, page.marginalia, preds));
  });
  StageResult res;
  res.records = pages.size();
  res.summary = std::to_string(pages.size()) + " overlays";
  return res;
}

std::vector<std::string> default_lexicon() {
  return {"anno", "bene", "dicit", "est", "et", "hic", "liber", "nota", "och", "quod", "som", "vide"};
}

}  // namespace marginalia
