// Benchmark comparing the OpenMP kernels against their serial references.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "memaudit/corpus.hpp"
#include "memaudit/decomposition.hpp"
#include "memaudit/distribution.hpp"
#include "memaudit/embedding.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/score.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace memaudit;
using Clock = std::chrono::steady_clock;

namespace {

double time_of(const std::function<void()>& fn) {
  const auto start = Clock::now();
  fn();
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-24s %10.3fs %10.3fs %8.2fx\n", name, serial, parallel,
              serial / parallel);
}

ingest::Corpus make_corpus(std::size_t count) {
  rng::Engine eng(1);
  ingest::Corpus corpus;
  corpus.pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ingest::SamplePair pair;
    pair.id = "b" + std::to_string(i);
    const auto len = 40 + eng.bounded(21);
    for (std::uint64_t j = 0; j < len; ++j)
      pair.reference_tokens.push_back("w" + std::to_string(eng.bounded(400)));
    const auto keep = eng.bounded(len + 1);
    pair.generated_tokens.assign(
        pair.reference_tokens.begin(),
        pair.reference_tokens.begin() + static_cast<std::ptrdiff_t>(keep));
    while (pair.generated_tokens.size() < len)
      pair.generated_tokens.push_back("g" + std::to_string(eng.bounded(400)));
    pair.has_generated = true;
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

}  // namespace

int main() {
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("kernel benchmark, %d threads\n", threads);
  std::printf("%-24s %11s %11s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  {
    const auto corpus = make_corpus(30000);
    metrics::MetricConfig cfg;
    score::ScoreResult out;
    const double ts =
        time_of([&] { out = score::reference::score_corpus(corpus, cfg); });
    const double tp = time_of([&] { out = score::score_corpus(corpus, cfg, 0); });
    row("corpus scoring", ts, tp);
  }
  {
    rng::Engine eng(2);
    std::vector<int> values(20000);
    for (auto& v : values) v = static_cast<int>(eng.bounded(50));
    const auto stat = distribution::parse_statistic("quantile:0.99");
    distribution::BootstrapResult out;
    const double ts = time_of([&] {
      out = distribution::reference::bootstrap(values, stat, 2000, 9, 0.95);
    });
    const double tp = time_of(
        [&] { out = distribution::bootstrap(values, stat, 2000, 9, 0.95, 0); });
    row("bootstrap resampling", ts, tp);
  }
  {
    rng::Engine eng(3);
    decomposition::CorrectnessMatrix m(std::vector<std::string>(60000, "r"), 24);
    std::vector<std::uint8_t> bits(24);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (auto& b : bits) b = eng.coin();
      m.set_row(i, bits);
    }
    std::vector<decomposition::MiEntry> out;
    const double ts = time_of([&] {
      out = decomposition::reference::mi_profile(
          m, decomposition::MiMode::pairwise);
    });
    const double tp = time_of([&] {
      out = decomposition::mi_profile(m, decomposition::MiMode::pairwise, 0);
    });
    row("MI profile", ts, tp);
  }
  {
    rng::Engine eng(4);
    std::vector<embedding::EmbeddingRecord> records(1500);
    for (std::size_t i = 0; i < records.size(); ++i) {
      records[i].id = "e" + std::to_string(i);
      records[i].input_vec.resize(64);
      records[i].full_vec.resize(64);
      for (auto& x : records[i].input_vec)
        x = static_cast<float>(eng.uniform() - 0.5);
      for (auto& x : records[i].full_vec)
        x = static_cast<float>(eng.uniform() - 0.5);
    }
    std::map<std::string, double> out;
    const double ts = time_of([&] {
      out = embedding::reference::mean_similarity(records,
                                                  embedding::Field::input);
    });
    const double tp = time_of([&] {
      out = embedding::mean_similarity(records, embedding::Field::input, 0);
    });
    row("pairwise similarity", ts, tp);
  }
  return 0;
}
