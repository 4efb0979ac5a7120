#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "memaudit/corpus.hpp"
#include "memaudit/metrics.hpp"

namespace memaudit::score {

struct PairScore {
  std::string id;
  metrics::MetricBundle bundle;
  bool flagged_empty_suffix = false;
  bool flagged_no_generated = false;
  bool scored() const { return !flagged_empty_suffix && !flagged_no_generated; }
};

struct ScoreSummary {
  std::size_t records = 0;
  std::size_t scored = 0;
  std::size_t flagged_empty_suffix = 0;
  std::size_t flagged_no_generated = 0;
  std::size_t parse_errors = 0;
  std::size_t relation_violations = 0;      // asserted inequality chain
  std::size_t prefix_link_violations = 0;   // reported-only link
};

struct ScoreResult {
  std::vector<PairScore> pairs;  // input order preserved
  ScoreSummary summary;
};

// OpenMP-parallel over pairs; output identical to the serial reference for
// any thread count. threads <= 0 uses the runtime default.
ScoreResult score_corpus(const ingest::Corpus& corpus,
                         const metrics::MetricConfig& cfg, int threads);

namespace reference {
// Serial implementation kept as the equivalence baseline for tests and the
// benchmark target.
ScoreResult score_corpus(const ingest::Corpus& corpus,
                         const metrics::MetricConfig& cfg);
}  // namespace reference

}  // namespace memaudit::score
