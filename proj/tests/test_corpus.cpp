#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "memaudit/corpus.hpp"
#include "memaudit/error.hpp"

using namespace memaudit;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& content, const char* tag = "corpus") {
    path = fs::temp_directory_path() /
           (std::string("memaudit_test_") + tag + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".tmp");
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  ~TempFile() { std::error_code ec; fs::remove(path, ec); }
};

const ingest::SplitConfig kCut10{10, false};

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("well-formed jsonl loads every line") {
  TempFile f(
      R"({"id":"a","reference":"0123456789 tail one","generated":"tail one"})"
      "\n"
      R"({"id":"b","reference":"0123456789 tail two","generated":"tail two"})"
      "\n"
      R"({"id":"c","reference":"0123456789 tail three","generated":"x"})"
      "\n");
  const auto corpus = ingest::load_corpus(f.path.string(),
                                          ingest::CorpusFormat::jsonl, kCut10);
  REQUIRE(corpus.pairs.size() == 3);
  CHECK(corpus.errors.empty());
  CHECK(corpus.pairs[0].id == "a");
  CHECK(corpus.pairs[0].prefix_tokens == std::vector<std::string>{"0123456789"});
  CHECK(corpus.pairs[0].reference_tokens ==
        std::vector<std::string>{"tail", "one"});
  CHECK(corpus.pairs[0].generated_tokens ==
        std::vector<std::string>{"tail", "one"});
  CHECK(corpus.pairs[0].has_generated);
  CHECK(!corpus.pairs[0].empty_suffix);
}

TEST_CASE("malformed line is recorded with its line number") {
  TempFile f(
      R"({"id":"a","reference":"0123456789 tail","generated":"t"})"
      "\n"
      "this is not json\n"
      R"({"id":"c","reference":"0123456789 tail","generated":"t"})"
      "\n");
  const auto corpus = ingest::load_corpus(f.path.string(),
                                          ingest::CorpusFormat::jsonl, kCut10);
  CHECK(corpus.pairs.size() == 2);
  REQUIRE(corpus.errors.size() == 1);
  CHECK(corpus.errors[0].line == 2);
}

TEST_CASE("missing required fields and duplicates are per-line errors") {
  TempFile f(
      R"({"id":"a"})"
      "\n"
      R"({"reference":"no id here"})"
      "\n"
      R"({"id":"b","reference":"0123456789 ok"})"
      "\n"
      R"({"id":"b","reference":"0123456789 dup"})"
      "\n"
      R"({"id":"d","reference":""})"
      "\n");
  const auto corpus = ingest::load_corpus(f.path.string(),
                                          ingest::CorpusFormat::jsonl, kCut10);
  CHECK(corpus.pairs.size() == 1);
  CHECK(corpus.errors.size() == 4);
  CHECK(!corpus.pairs[0].has_generated);
}

TEST_CASE("empty file loads as an empty corpus with a warning flag") {
  TempFile f("");
  const auto corpus = ingest::load_corpus(f.path.string(),
                                          ingest::CorpusFormat::jsonl, kCut10);
  CHECK(corpus.pairs.empty());
  CHECK(corpus.empty_input);
}

TEST_CASE("missing file throws a data error") {
  CHECK_THROWS_AS(ingest::load_corpus("/nonexistent/nope.jsonl",
                                      ingest::CorpusFormat::jsonl, kCut10),
                  DataError);
}

TEST_CASE("inline header carries run metadata") {
  TempFile f(
      R"({"run_id":"run-7","checkpoint":"ck-760","epoch":10,"loss":1.25})"
      "\n"
      R"({"id":"a","reference":"0123456789 tail","generated":"t"})"
      "\n");
  const auto corpus = ingest::load_corpus(f.path.string(),
                                          ingest::CorpusFormat::jsonl, kCut10);
  CHECK(corpus.run.run_id == "run-7");
  CHECK(corpus.run.checkpoint_label == "ck-760");
  REQUIRE(corpus.run.epoch.has_value());
  CHECK(*corpus.run.epoch == 10);
  REQUIRE(corpus.run.mean_loss.has_value());
  CHECK(*corpus.run.mean_loss == 1.25);
  CHECK(corpus.pairs.size() == 1);
}

TEST_CASE("manifest file loads run metadata") {
  TempFile f(R"({"run_id":"m1","checkpoint":"ck","epoch":3,"loss":0.5})", "manifest");
  const auto run = ingest::load_manifest(f.path.string());
  CHECK(run.run_id == "m1");
  CHECK(*run.epoch == 3);

  TempFile bad("not json {", "manifest_bad");
  CHECK_THROWS_AS(ingest::load_manifest(bad.path.string()), DataError);
}

TEST_CASE("tsv format") {
  TempFile f("a\t0123456789 tail one\ttail one\nb\t0123456789 only ref\nbad-line\n");
  const auto corpus =
      ingest::load_corpus(f.path.string(), ingest::CorpusFormat::tsv, kCut10);
  REQUIRE(corpus.pairs.size() == 2);
  CHECK(corpus.pairs[0].has_generated);
  CHECK(!corpus.pairs[1].has_generated);
  CHECK(corpus.errors.size() == 1);
  CHECK(corpus.errors[0].line == 3);
}

TEST_CASE("short records keep their slot but are flagged") {
  TempFile f(
      R"({"id":"short","reference":"tiny","generated":"t"})"
      "\n"
      R"({"id":"long","reference":"0123456789 tail","generated":"t"})"
      "\n");
  const auto corpus = ingest::load_corpus(f.path.string(),
                                          ingest::CorpusFormat::jsonl, kCut10);
  REQUIRE(corpus.pairs.size() == 2);
  CHECK(corpus.pairs[0].empty_suffix);
  CHECK(corpus.pairs[0].reference_tokens.empty());
  CHECK(!corpus.pairs[1].empty_suffix);
}

TEST_CASE("loading is deterministic") {
  TempFile f(
      R"({"id":"a","reference":"0123456789 tail one","generated":"tail one"})"
      "\n"
      "broken\n");
  const auto c1 = ingest::load_corpus(f.path.string(),
                                      ingest::CorpusFormat::jsonl, kCut10);
  const auto c2 = ingest::load_corpus(f.path.string(),
                                      ingest::CorpusFormat::jsonl, kCut10);
  REQUIRE(c1.pairs.size() == c2.pairs.size());
  for (std::size_t i = 0; i < c1.pairs.size(); ++i) {
    CHECK(c1.pairs[i].id == c2.pairs[i].id);
    CHECK(c1.pairs[i].reference_tokens == c2.pairs[i].reference_tokens);
  }
  CHECK(c1.errors.size() == c2.errors.size());
}

TEST_CASE("unknown format name is a usage error") {
  CHECK_THROWS_AS(ingest::parse_format("parquet"), InvalidParameter);
}

}  // TEST_SUITE
