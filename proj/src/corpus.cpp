#include "memaudit/corpus.hpp"

#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "memaudit/error.hpp"
#include "memaudit/text.hpp"

namespace memaudit::ingest {

using nlohmann::json;

CorpusFormat parse_format(const std::string& name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "tsv") return CorpusFormat::tsv;
  throw InvalidParameter("unknown corpus format: " + name);
}

SamplePair make_sample_pair(const RawRecord& rec, const SplitConfig& cfg) {
  SamplePair pair;
  pair.id = rec.id;
  const auto split = cfg.snap_word_boundary
                         ? text::split_prefix_snap(rec.reference, cfg.cut)
                         : text::split_prefix(rec.reference, cfg.cut);
  pair.prefix_tokens = text::tokenize_words(split.prefix);
  pair.reference_tokens = text::tokenize_words(split.suffix);
  pair.empty_suffix = split.suffix.empty();
  if (rec.generated) {
    pair.generated_tokens = text::tokenize_words(*rec.generated);
    pair.has_generated = true;
  }
  return pair;
}

namespace {

void apply_metadata_fields(const json& j, RunMetadata& run) {
  if (j.contains("run_id")) run.run_id = j.at("run_id").get<std::string>();
  if (j.contains("checkpoint"))
    run.checkpoint_label = j.at("checkpoint").get<std::string>();
  if (j.contains("epoch")) run.epoch = j.at("epoch").get<int>();
  if (j.contains("loss")) run.mean_loss = j.at("loss").get<double>();
}

std::optional<RawRecord> parse_jsonl_line(const std::string& line,
                                          std::size_t lineno, RawCorpus& out,
                                          bool allow_header) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    out.errors.push_back({lineno, "malformed json record"});
    return std::nullopt;
  }
  if (allow_header && !j.contains("id") && j.contains("run_id")) {
    apply_metadata_fields(j, out.run);
    return std::nullopt;
  }
  if (!j.contains("id") || !j.at("id").is_string()) {
    out.errors.push_back({lineno, "missing required field: id"});
    return std::nullopt;
  }
  if (!j.contains("reference") || !j.at("reference").is_string()) {
    out.errors.push_back({lineno, "missing required field: reference"});
    return std::nullopt;
  }
  RawRecord rec;
  rec.id = j.at("id").get<std::string>();
  rec.reference = j.at("reference").get<std::string>();
  if (j.contains("generated")) {
    if (!j.at("generated").is_string()) {
      out.errors.push_back({lineno, "field 'generated' must be a string"});
      return std::nullopt;
    }
    rec.generated = j.at("generated").get<std::string>();
  }
  return rec;
}

std::optional<RawRecord> parse_tsv_line(const std::string& line,
                                        std::size_t lineno, RawCorpus& out) {
  const auto t1 = line.find('\t');
  if (t1 == std::string::npos) {
    out.errors.push_back({lineno, "expected at least 2 tab-separated fields"});
    return std::nullopt;
  }
  RawRecord rec;
  rec.id = line.substr(0, t1);
  const auto t2 = line.find('\t', t1 + 1);
  if (t2 == std::string::npos) {
    rec.reference = line.substr(t1 + 1);
  } else {
    rec.reference = line.substr(t1 + 1, t2 - t1 - 1);
    rec.generated = line.substr(t2 + 1);
  }
  return rec;
}

}  // namespace

RawCorpus load_raw(const std::string& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);

  RawCorpus corpus;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  bool any_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    any_content = true;

    std::optional<RawRecord> rec;
    if (format == CorpusFormat::jsonl) {
      rec = parse_jsonl_line(line, lineno, corpus, /*allow_header=*/lineno == 1);
    } else {
      rec = parse_tsv_line(line, lineno, corpus);
    }
    if (!rec) continue;
    if (rec->reference.empty()) {
      corpus.errors.push_back({lineno, "empty reference text"});
      continue;
    }
    if (!seen_ids.insert(rec->id).second) {
      corpus.errors.push_back({lineno, "duplicate id: " + rec->id});
      continue;
    }
    corpus.records.push_back(std::move(*rec));
  }
  corpus.empty_input = !any_content;
  return corpus;
}

Corpus load_corpus(const std::string& path, CorpusFormat format,
                   const SplitConfig& cfg) {
  RawCorpus raw = load_raw(path, format);
  Corpus corpus;
  corpus.run = raw.run;
  corpus.errors = std::move(raw.errors);
  corpus.empty_input = raw.empty_input;
  corpus.pairs.reserve(raw.records.size());
  for (const auto& rec : raw.records)
    corpus.pairs.push_back(make_sample_pair(rec, cfg));
  return corpus;
}

RunMetadata load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest file: " + path);
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw DataError("malformed manifest file: " + path);
  RunMetadata run;
  apply_metadata_fields(j, run);
  return run;
}

}  // namespace memaudit::ingest
