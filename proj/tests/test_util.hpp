#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memaudit/metrics.hpp"
#include "memaudit/rng.hpp"

namespace testutil {

// Random token-id sequence with the given vocabulary, length 0..max_len.
inline std::vector<std::int32_t> random_ids(memaudit::rng::Engine& eng,
                                            std::uint64_t vocab,
                                            std::uint64_t max_len) {
  std::vector<std::int32_t> out(eng.bounded(max_len + 1));
  for (auto& v : out) v = static_cast<std::int32_t>(eng.bounded(vocab));
  return out;
}

// A pair with some shared prefix / copied runs, so the interesting regimes
// (long matches, partial overlaps) actually occur.
inline std::pair<std::vector<std::int32_t>, std::vector<std::int32_t>>
related_pair(memaudit::rng::Engine& eng, std::uint64_t vocab,
             std::uint64_t max_len) {
  auto ref = random_ids(eng, vocab, max_len);
  std::vector<std::int32_t> gen;
  if (!ref.empty() && eng.bounded(4) != 0) {
    const auto keep = eng.bounded(ref.size() + 1);
    gen.assign(ref.begin(), ref.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  const auto extra = random_ids(eng, vocab, max_len);
  gen.insert(gen.end(), extra.begin(), extra.end());
  if (gen.size() > max_len) gen.resize(max_len);
  return {gen, ref};
}

struct ChainMetrics {
  int n_pre, lcs, lev, n_max, run, d1, multiset, n1, n2;
  double d_w;
};

inline ChainMetrics chain_metrics(std::span<const std::int32_t> gen,
                                  std::span<const std::int32_t> ref,
                                  double w = 3.0) {
  using namespace memaudit::metrics;
  ChainMetrics m{};
  m.n1 = static_cast<int>(gen.size());
  m.n2 = static_cast<int>(ref.size());
  m.n_pre = prefix_match_length(gen, ref);
  m.lcs = lcs_length(gen, ref);
  m.lev = levenshtein_words(gen, ref);
  m.n_max = max_shared_ngram(gen, ref);
  const auto st = inplace_stats(gen, ref);
  m.run = st.run;
  m.d1 = st.d1;
  m.multiset = multiset_overlap(gen, ref);
  const int trunc = std::max(1, std::max(m.n1, m.n2));
  m.d_w = weighted_distance(gen, ref, w, trunc);
  return m;
}

// The ordering chain plus the edit-distance bounds; true when all hold.
inline bool chain_holds(const ChainMetrics& m) {
  const int max_n = std::max(m.n1, m.n2);
  if (!(m.lcs >= m.n_max)) return false;
  if (!(m.n_max >= m.run)) return false;
  if (!(m.run >= m.n_pre)) return false;
  if (!(m.multiset >= m.lcs)) return false;
  if (!(m.n1 + m.n2 - 2 * m.lcs >= m.lev)) return false;
  if (!(m.d1 >= max_n - m.lcs)) return false;
  if (!(2 * (max_n - m.lcs) >= m.lev)) return false;
  return true;
}

}  // namespace testutil
