#include <string>
#include <vector>

#include "doctest.h"
#include "memaudit/corpus.hpp"
#include "memaudit/decomposition.hpp"
#include "memaudit/distribution.hpp"
#include "memaudit/embedding.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/score.hpp"
#include "test_util.hpp"

using namespace memaudit;

namespace {

ingest::Corpus random_corpus(std::uint64_t seed, std::size_t count) {
  rng::Engine eng(seed);
  ingest::Corpus corpus;
  for (std::size_t i = 0; i < count; ++i) {
    ingest::SamplePair pair;
    pair.id = "p" + std::to_string(i);
    const auto [gen, ref] = testutil::related_pair(eng, 12, 30);
    for (const auto v : gen)
      pair.generated_tokens.push_back("t" + std::to_string(v));
    for (const auto v : ref)
      pair.reference_tokens.push_back("t" + std::to_string(v));
    pair.has_generated = true;
    pair.empty_suffix = pair.reference_tokens.empty();
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

bool bundles_equal(const metrics::MetricBundle& a,
                   const metrics::MetricBundle& b) {
  if (a.n_pre != b.n_pre || a.lcs != b.lcs || a.levenshtein != b.levenshtein ||
      a.n_max != b.n_max || a.inplace_run != b.inplace_run || a.d1 != b.d1 ||
      a.n1 != b.n1 || a.n2 != b.n2 || a.multiset != b.multiset)
    return false;
  if (a.d_w != b.d_w) return false;  // bitwise
  if (a.rouge_l != b.rouge_l) return false;
  if (a.correct_bits != b.correct_bits) return false;
  if (a.rouge_n.size() != b.rouge_n.size()) return false;
  for (std::size_t i = 0; i < a.rouge_n.size(); ++i) {
    if (a.rouge_n[i].precision != b.rouge_n[i].precision) return false;
    if (a.rouge_n[i].recall != b.rouge_n[i].recall) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("parallel") {

TEST_CASE("parallel scoring equals the serial reference for any thread count") {
  const auto corpus = random_corpus(404, 600);
  metrics::MetricConfig cfg;
  const auto serial = score::reference::score_corpus(corpus, cfg);
  for (const int threads : {1, 2, 4}) {
    const auto parallel = score::score_corpus(corpus, cfg, threads);
    REQUIRE(parallel.pairs.size() == serial.pairs.size());
    for (std::size_t i = 0; i < serial.pairs.size(); ++i) {
      REQUIRE(parallel.pairs[i].id == serial.pairs[i].id);
      REQUIRE(parallel.pairs[i].scored() == serial.pairs[i].scored());
      if (serial.pairs[i].scored())
        REQUIRE(bundles_equal(parallel.pairs[i].bundle, serial.pairs[i].bundle));
    }
    CHECK(parallel.summary.scored == serial.summary.scored);
    CHECK(parallel.summary.relation_violations ==
          serial.summary.relation_violations);
    CHECK(parallel.summary.prefix_link_violations ==
          serial.summary.prefix_link_violations);
  }
}

TEST_CASE("parallel bootstrap equals the serial reference bitwise") {
  std::vector<int> values(5000);
  rng::Engine eng(405);
  for (auto& v : values) v = static_cast<int>(eng.bounded(60));
  for (const auto& name : {"max", "mean", "quantile:0.95", "topk-mean:10"}) {
    const auto stat = distribution::parse_statistic(name);
    const auto serial = distribution::reference::bootstrap(values, stat, 400, 31, 0.9);
    for (const int threads : {1, 2, 4}) {
      const auto parallel =
          distribution::bootstrap(values, stat, 400, 31, 0.9, threads);
      REQUIRE(parallel.point == serial.point);
      REQUIRE(parallel.lo == serial.lo);
      REQUIRE(parallel.hi == serial.hi);
    }
  }
}

TEST_CASE("parallel MI profile equals the serial reference") {
  rng::Engine eng(406);
  decomposition::CorrectnessMatrix m(
      std::vector<std::string>(4000, "r"), 12);
  std::vector<std::uint8_t> row(12);
  for (std::size_t i = 0; i < 4000; ++i) {
    const auto len = 4 + eng.bounded(9);
    row.resize(len);
    for (auto& b : row) b = eng.coin();
    m.set_row(i, row);
  }
  for (const auto mode : {decomposition::MiMode::pairwise,
                          decomposition::MiMode::prefix_conjunction}) {
    const auto serial = decomposition::reference::mi_profile(m, mode);
    for (const int threads : {1, 2, 4}) {
      const auto parallel = decomposition::mi_profile(m, mode, threads);
      REQUIRE(parallel.size() == serial.size());
      for (std::size_t i = 0; i < serial.size(); ++i) {
        REQUIRE(parallel[i].source == serial[i].source);
        REQUIRE(parallel[i].target == serial[i].target);
        REQUIRE(parallel[i].bits == serial[i].bits);
        REQUIRE(parallel[i].rows == serial[i].rows);
      }
    }
  }
}

TEST_CASE("mean similarity is identical across thread counts") {
  rng::Engine eng(407);
  std::vector<embedding::EmbeddingRecord> records;
  for (std::size_t i = 0; i < 120; ++i) {
    embedding::EmbeddingRecord r;
    r.id = "e" + std::to_string(i);
    r.input_vec.resize(16);
    r.full_vec.resize(16);
    for (auto& x : r.input_vec) x = static_cast<float>(eng.uniform() - 0.5);
    for (auto& x : r.full_vec) x = static_cast<float>(eng.uniform() - 0.5);
    records.push_back(std::move(r));
  }
  const auto one = embedding::mean_similarity(records, embedding::Field::input, 1);
  for (const int threads : {2, 4}) {
    const auto many =
        embedding::mean_similarity(records, embedding::Field::input, threads);
    for (const auto& [id, v] : one) REQUIRE(many.at(id) == v);  // bitwise
  }
  // And it agrees with the direct quadratic reference.
  const auto ref = embedding::reference::mean_similarity(records,
                                                         embedding::Field::input);
  for (const auto& [id, v] : one)
    REQUIRE(v == doctest::Approx(ref.at(id)).epsilon(1e-10));
}

}  // TEST_SUITE
