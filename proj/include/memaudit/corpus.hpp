#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace memaudit::ingest {

struct RawRecord {
  std::string id;
  std::string reference;                 // full training text
  std::optional<std::string> generated;  // absent for pre-split probe corpora
};

struct RunMetadata {
  std::string run_id;
  std::string checkpoint_label;
  std::optional<int> epoch;
  std::optional<double> mean_loss;
};

struct SamplePair {
  std::string id;
  std::vector<std::string> prefix_tokens;
  std::vector<std::string> reference_tokens;  // suffix after the cut
  std::vector<std::string> generated_tokens;
  bool empty_suffix = false;  // reference shorter than the cut; kept but flagged
  bool has_generated = false;
};

struct ParseError {
  std::size_t line;  // 1-based
  std::string message;
};

struct Corpus {
  std::vector<SamplePair> pairs;
  RunMetadata run;
  std::vector<ParseError> errors;
  bool empty_input = false;
};

enum class CorpusFormat { jsonl, tsv };

CorpusFormat parse_format(const std::string& name);

struct SplitConfig {
  std::size_t cut = 100;
  bool snap_word_boundary = false;
};

SamplePair make_sample_pair(const RawRecord& rec, const SplitConfig& cfg);

struct RawCorpus {
  std::vector<RawRecord> records;
  RunMetadata run;
  std::vector<ParseError> errors;
  bool empty_input = false;
};

// Line-delimited records with fields "id", "reference", "generated".
// A leading object carrying "run_id" but no "id" is treated as an inline
// run-metadata header. Order is preserved; malformed lines become per-line
// error entries rather than aborting the load.
RawCorpus load_raw(const std::string& path, CorpusFormat format);

Corpus load_corpus(const std::string& path, CorpusFormat format,
                   const SplitConfig& cfg);

// Sidecar manifest with fields "run_id", "checkpoint", "epoch", "loss".
RunMetadata load_manifest(const std::string& path);

}  // namespace memaudit::ingest
