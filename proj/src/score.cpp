#include "memaudit/score.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace memaudit::score {

namespace {

PairScore score_one(const ingest::SamplePair& pair,
                    const metrics::MetricConfig& cfg) {
  PairScore ps;
  ps.id = pair.id;
  ps.flagged_empty_suffix = pair.empty_suffix;
  ps.flagged_no_generated = !pair.has_generated;
  if (ps.scored()) ps.bundle = metrics::metric_bundle(pair, cfg);
  return ps;
}

ScoreSummary summarize(const ingest::Corpus& corpus,
                       const std::vector<PairScore>& pairs,
                       const metrics::MetricConfig& cfg) {
  ScoreSummary s;
  s.records = corpus.pairs.size();
  s.parse_errors = corpus.errors.size();
  for (const auto& ps : pairs) {
    if (ps.flagged_empty_suffix) {
      ++s.flagged_empty_suffix;
      continue;
    }
    if (ps.flagged_no_generated) {
      ++s.flagged_no_generated;
      continue;
    }
    ++s.scored;
    const auto rc = metrics::check_relations(ps.bundle, cfg.d_w_base);
    if (!rc.chain_ok) ++s.relation_violations;
    if (!rc.prefix_link_ok) ++s.prefix_link_violations;
  }
  return s;
}

}  // namespace

ScoreResult score_corpus(const ingest::Corpus& corpus,
                         const metrics::MetricConfig& cfg, int threads) {
  ScoreResult result;
  result.pairs.resize(corpus.pairs.size());
  const auto n = static_cast<std::int64_t>(corpus.pairs.size());
#ifdef _OPENMP
  if (threads > 0) {
#pragma omp parallel for schedule(dynamic, 64) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i)
      result.pairs[i] = score_one(corpus.pairs[i], cfg);
  } else {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n; ++i)
      result.pairs[i] = score_one(corpus.pairs[i], cfg);
  }
#else
  (void)threads;
  for (std::int64_t i = 0; i < n; ++i)
    result.pairs[i] = score_one(corpus.pairs[i], cfg);
#endif
  result.summary = summarize(corpus, result.pairs, cfg);
  return result;
}

namespace reference {

ScoreResult score_corpus(const ingest::Corpus& corpus,
                         const metrics::MetricConfig& cfg) {
  ScoreResult result;
  result.pairs.reserve(corpus.pairs.size());
  for (const auto& pair : corpus.pairs)
    result.pairs.push_back(score_one(pair, cfg));
  result.summary = summarize(corpus, result.pairs, cfg);
  return result;
}

}  // namespace reference

}  // namespace memaudit::score
