// Command-line driver for the marginalia pipeline stages.
//
// Exit status: 0 success, 1 input or usage error, 2 internal invariant
// violation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "marginalia/config.hpp"
#include "marginalia/errors.hpp"
#include "marginalia/pipeline.hpp"
#include "marginalia/synthetic.hpp"

namespace fs = std::filesystem;
using namespace marginalia;

namespace {

struct GlobalOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string work_dir;
  std::string corpus_dir;
  int jobs = 0;
  std::optional<std::uint64_t> seed;
};

PipelineConfig resolve_config(const GlobalOptions& g) {
  PipelineConfig cfg;
  if (!g.config_file.empty()) cfg = load_config(g.config_file);
  for (const std::string& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!g.work_dir.empty()) cfg.work_dir = g.work_dir;
  if (!g.corpus_dir.empty()) cfg.corpus_dir = g.corpus_dir;
  if (g.jobs > 0) cfg.jobs = g.jobs;
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

void report(const char* stage, const StageResult& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << stage << ": " << r.summary;
  if (r.summary.empty() || r.summary.back() != '\n') std::cout << "\n";
}

std::vector<std::string> read_lexicon(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open lexicon '" + path.string() + "'");
  std::vector<std::string> words;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  return words;
}

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marginalia detection and segmentation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("-c,--config", g.config_file, "INI-style config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override a config key (key=value), repeatable");
  app.add_option("-w,--work", g.work_dir, "Work directory (overrides paths.work_dir)");
  app.add_option("--corpus", g.corpus_dir, "Corpus directory (overrides paths.corpus_dir)");
  app.add_option("-j,--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Corpus seed");

  auto* synth = app.add_subcommand("synth", "Write a synthetic LabelMe corpus");
  std::string synth_out;
  int synth_count = 20, synth_w = 700, synth_h = 1000;
  std::uint64_t synth_seed = 1;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--count", synth_count, "Number of pages")->check(CLI::PositiveNumber);
  synth->add_option("--width", synth_w, "Page width")->check(CLI::Range(200, 20000));
  synth->add_option("--height", synth_h, "Page height")->check(CLI::Range(200, 20000));
  synth->add_option("--synth-seed", synth_seed, "Generator seed");

  auto* ingest = app.add_subcommand("ingest", "Parse LabelMe files, rescale pages, write pages.jsonl");
  auto* split = app.add_subcommand("split", "Seeded train/test split of pages.jsonl");
  auto* augment = app.add_subcommand("augment", "Four variants per training page");
  auto* props = app.add_subcommand("proposals", "MSER region proposals");
  bool overlays = false;
  props->add_flag("--overlays", overlays, "Also write proposal debug images");
  auto* samples = app.add_subcommand("samples", "Positive and negative 227x227 ROIs");

  std::string detections;
  auto* segment = app.add_subcommand("segment", "Line and word segmentation of marginalia crops");
  segment->add_option("--detections", detections, "Detections file (defaults to ground truth)")
      ->check(CLI::ExistingFile);
  auto* eval = app.add_subcommand("eval", "Score detections against ground truth");
  eval->add_option("--detections", detections, "Detections file")->required()->check(CLI::ExistingFile);
  auto* overlay = app.add_subcommand("overlay", "Ground truth and detections drawn on test pages");
  overlay->add_option("--detections", detections, "Detections file")->check(CLI::ExistingFile);

  std::string lexicon_file;
  auto* recognize = app.add_subcommand("recognize-mock", "Deterministic stand-in recognizer over word crops");
  recognize->add_option("--lexicon", lexicon_file, "One word per line")->check(CLI::ExistingFile);

  std::string results_file, truth_file;
  auto* score = app.add_subcommand("score-words", "Word accuracy and CER of recognition results");
  score->add_option("--results", results_file, "Recognition results")->required()->check(CLI::ExistingFile);
  score->add_option("--truth", truth_file, "Reference words ({crop_id, text} per line)")
      ->required()
      ->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "ingest, split, augment, proposals, samples, segment, recognize-mock");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) {
      const auto pages = write_synthetic_corpus(synth_out, synth_count, synth_w, synth_h, synth_seed);
      std::cout << "synth: wrote " << pages.size() << " pages to " << synth_out << "\n";
      return 0;
    }
    const PipelineConfig cfg = resolve_config(g);
    if (ingest->parsed()) report("ingest", run_ingest(cfg));
    if (split->parsed()) report("split", run_split(cfg));
    if (augment->parsed()) report("augment", run_augment(cfg));
    if (props->parsed()) report("proposals", run_proposals(cfg, overlays));
    if (samples->parsed()) report("samples", run_samples(cfg));
    if (segment->parsed()) report("segment", run_segment(cfg, optional_path(detections)));
    if (eval->parsed()) report("eval", run_eval(cfg, detections));
    if (overlay->parsed()) report("overlay", run_overlay(cfg, optional_path(detections)));
    if (recognize->parsed()) {
      const auto lexicon = lexicon_file.empty() ? default_lexicon() : read_lexicon(lexicon_file);
      report("recognize-mock", run_recognize_mock(cfg, lexicon));
    }
    if (score->parsed()) report("score-words", run_score_words(cfg, results_file, truth_file));
    if (run->parsed()) {
      report("ingest", run_ingest(cfg));
      report("split", run_split(cfg));
      report("augment", run_augment(cfg));
      report("proposals", run_proposals(cfg));
      report("samples", run_samples(cfg));
      report("segment", run_segment(cfg, std::nullopt));
      report("recognize-mock", run_recognize_mock(cfg, default_lexicon()));
    }
    return 0;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InvariantViolation& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
