#include "memaudit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "memaudit/error.hpp"

namespace memaudit::metrics {

void intern_pair(const Tokens& a, const Tokens& b, TokenIds& out_a,
                 TokenIds& out_b) {
  std::unordered_map<std::string_view, std::int32_t> ids;
  ids.reserve(a.size() + b.size());
  auto assign = [&](const Tokens& src, TokenIds& dst) {
    dst.clear();
    dst.reserve(src.size());
    for (const auto& tok : src) {
      auto [it, inserted] =
          ids.emplace(tok, static_cast<std::int32_t>(ids.size()));
      dst.push_back(it->second);
    }
  };
  assign(a, out_a);
  assign(b, out_b);
}

int prefix_match_length(IdSpan generated, IdSpan reference) {
  const std::size_t limit = std::min(generated.size(), reference.size());
  std::size_t k = 0;
  while (k < limit && generated[k] == reference[k]) ++k;
  return static_cast<int>(k);
}

int lcs_length(IdSpan a, IdSpan b) {
  if (a.empty() || b.empty()) return 0;
  if (b.size() > a.size()) std::swap(a, b);
  std::vector<std::int32_t> row(b.size() + 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::int32_t diag = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::int32_t up = row[j + 1];
      row[j + 1] = (a[i] == b[j]) ? diag + 1 : std::max(up, row[j]);
      diag = up;
    }
  }
  return row[b.size()];
}

int levenshtein_words(IdSpan a, IdSpan b) {
  if (a.empty()) return static_cast<int>(b.size());
  if (b.empty()) return static_cast<int>(a.size());
  if (b.size() > a.size()) std::swap(a, b);
  std::vector<std::int32_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<std::int32_t>(j);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::int32_t diag = row[0];
    row[0] = static_cast<std::int32_t>(i + 1);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::int32_t up = row[j + 1];
      const std::int32_t sub = diag + (a[i] == b[j] ? 0 : 1);
      row[j + 1] = std::min({sub, up + 1, row[j] + 1});
      diag = up;
    }
  }
  return row[b.size()];
}

int max_shared_ngram(IdSpan a, IdSpan b) {
  if (a.empty() || b.empty()) return 0;
  if (b.size() > a.size()) std::swap(a, b);
  std::vector<std::int32_t> row(b.size() + 1, 0);
  std::int32_t best = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::int32_t diag = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::int32_t up = row[j + 1];
      row[j + 1] = (a[i] == b[j]) ? diag + 1 : 0;
      best = std::max(best, row[j + 1]);
      diag = up;
    }
  }
  return best;
}

InplaceStats inplace_stats(IdSpan a, IdSpan b) {
  const std::size_t overlap = std::min(a.size(), b.size());
  const std::size_t padded = std::max(a.size(), b.size());
  InplaceStats st;
  int run = 0;
  for (std::size_t j = 0; j < overlap; ++j) {
    if (a[j] == b[j]) {
      ++run;
      st.run = std::max(st.run, run);
    } else {
      ++st.d1;
      run = 0;
    }
  }
  st.d1 += static_cast<int>(padded - overlap);
  st.matched = static_cast<int>(padded) - st.d1;
  return st;
}

std::vector<std::uint8_t> mismatch_vector(IdSpan a, IdSpan b) {
  const std::size_t overlap = std::min(a.size(), b.size());
  const std::size_t padded = std::max(a.size(), b.size());
  std::vector<std::uint8_t> c(padded, 1);
  for (std::size_t j = 0; j < overlap; ++j) c[j] = (a[j] == b[j]) ? 0 : 1;
  return c;
}

double weighted_distance_from_mismatches(std::span<const std::uint8_t> c,
                                         double base, int truncation) {
  if (base <= 1.0) throw InvalidParameter("weighted distance requires base > 1");
  if (truncation < 1) throw InvalidParameter("truncation must be >= 1");
  const std::size_t limit =
      std::min<std::size_t>(c.size(), static_cast<std::size_t>(truncation));
  double sum = 0.0, factor = 1.0;
  for (std::size_t j = 0; j < limit; ++j) {
    factor /= base;
    if (c[j]) sum += factor;
  }
  return sum;
}

double weighted_distance(IdSpan a, IdSpan b, double base, int truncation) {
  const auto c = mismatch_vector(a, b);
  // Positions past both sequences contribute nothing.
  if (base <= 1.0) throw InvalidParameter("weighted distance requires base > 1");
  if (truncation < 1) throw InvalidParameter("truncation must be >= 1");
  return weighted_distance_from_mismatches(c, base, truncation);
}

int multiset_overlap(IdSpan a, IdSpan b) {
  std::vector<std::int32_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  int count = 0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i] < sb[j]) {
      ++i;
    } else if (sb[j] < sa[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

double rouge_l(IdSpan generated, IdSpan reference) {
  if (reference.empty())
    throw UndefinedScore("rouge_l undefined for empty reference");
  return static_cast<double>(lcs_length(generated, reference)) /
         static_cast<double>(reference.size());
}

namespace {

// Clipped multiset overlap of contiguous n-grams, exact via lexicographic
// sort of gram start positions.
int shared_ngram_count(IdSpan a, IdSpan b, int n) {
  const auto grams = [n](IdSpan s) {
    std::vector<std::size_t> starts(s.size() - n + 1);
    for (std::size_t i = 0; i < starts.size(); ++i) starts[i] = i;
    auto cmp = [&](std::size_t x, std::size_t y) {
      return std::lexicographical_compare(s.begin() + x, s.begin() + x + n,
                                          s.begin() + y, s.begin() + y + n);
    };
    std::sort(starts.begin(), starts.end(), cmp);
    return starts;
  };
  const auto ga = grams(a), gb = grams(b);
  auto less = [&](std::size_t x, std::size_t y) {
    return std::lexicographical_compare(a.begin() + x, a.begin() + x + n,
                                        b.begin() + y, b.begin() + y + n);
  };
  auto greater = [&](std::size_t x, std::size_t y) {
    return std::lexicographical_compare(b.begin() + y, b.begin() + y + n,
                                        a.begin() + x, a.begin() + x + n);
  };
  int count = 0;
  std::size_t i = 0, j = 0;
  while (i < ga.size() && j < gb.size()) {
    if (less(ga[i], gb[j])) {
      ++i;
    } else if (greater(ga[i], gb[j])) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

}  // namespace

RougeScore rouge_n(IdSpan generated, IdSpan reference, int n) {
  if (n < 1) throw InvalidParameter("rouge_n requires n >= 1");
  if (static_cast<int>(generated.size()) < n ||
      static_cast<int>(reference.size()) < n)
    throw UndefinedScore("rouge_n undefined: sequence shorter than n");
  const int shared = shared_ngram_count(generated, reference, n);
  RougeScore score;
  score.recall = static_cast<double>(shared) /
                 static_cast<double>(reference.size() - n + 1);
  score.precision = static_cast<double>(shared) /
                    static_cast<double>(generated.size() - n + 1);
  return score;
}

MetricBundle metric_bundle(const Tokens& generated, const Tokens& reference,
                           const MetricConfig& cfg) {
  TokenIds ga, rb;
  intern_pair(generated, reference, ga, rb);

  MetricBundle b;
  b.n1 = static_cast<int>(ga.size());
  b.n2 = static_cast<int>(rb.size());
  b.n_pre = prefix_match_length(ga, rb);
  b.lcs = lcs_length(ga, rb);
  b.levenshtein = levenshtein_words(ga, rb);
  b.n_max = max_shared_ngram(ga, rb);
  const auto inplace = inplace_stats(ga, rb);
  b.inplace_run = inplace.run;
  b.d1 = inplace.d1;
  b.multiset = multiset_overlap(ga, rb);

  const auto c = mismatch_vector(ga, rb);
  const int truncation =
      cfg.d_w_truncation > 0 ? cfg.d_w_truncation
                             : std::max(1, static_cast<int>(c.size()));
  b.d_w = weighted_distance_from_mismatches(c, cfg.d_w_base, truncation);

  if (!rb.empty()) b.rouge_l = rouge_l(ga, rb);
  for (const int n : cfg.rouge_ns) {
    RougeNEntry entry;
    entry.n = n;
    if (static_cast<int>(ga.size()) >= n && static_cast<int>(rb.size()) >= n) {
      const auto score = rouge_n(ga, rb, n);
      entry.precision = score.precision;
      entry.recall = score.recall;
    }
    b.rouge_n.push_back(entry);
  }

  const std::size_t valid =
      std::min({ga.size(), rb.size(), static_cast<std::size_t>(cfg.max_pos)});
  b.correct_bits.resize(valid);
  for (std::size_t j = 0; j < valid; ++j) b.correct_bits[j] = c[j] ? 0 : 1;
  return b;
}

MetricBundle metric_bundle(const ingest::SamplePair& pair,
                           const MetricConfig& cfg) {
  return metric_bundle(pair.generated_tokens, pair.reference_tokens, cfg);
}

int prefix_match_length(const Tokens& a, const Tokens& b) {
  TokenIds ia, ib;
  intern_pair(a, b, ia, ib);
  return prefix_match_length(IdSpan(ia), IdSpan(ib));
}
int lcs_length(const Tokens& a, const Tokens& b) {
  TokenIds ia, ib;
  intern_pair(a, b, ia, ib);
  return lcs_length(IdSpan(ia), IdSpan(ib));
}
int levenshtein_words(const Tokens& a, const Tokens& b) {
  TokenIds ia, ib;
  intern_pair(a, b, ia, ib);
  return levenshtein_words(IdSpan(ia), IdSpan(ib));
}
int max_shared_ngram(const Tokens& a, const Tokens& b) {
  TokenIds ia, ib;
  intern_pair(a, b, ia, ib);
  return max_shared_ngram(IdSpan(ia), IdSpan(ib));
}
InplaceStats inplace_stats(const Tokens& a, const Tokens& b) {
  TokenIds ia, ib;
  intern_pair(a, b, ia, ib);
  return inplace_stats(IdSpan(ia), IdSpan(ib));
}
double weighted_distance(const Tokens& a, const Tokens& b, double base,
                         int truncation) {
  TokenIds ia, ib;
  intern_pair(a, b, ia, ib);
  return weighted_distance(IdSpan(ia), IdSpan(ib), base, truncation);
}
double rouge_l(const Tokens& a, const Tokens& b) {
  TokenIds ia, ib;
  intern_pair(a, b, ia, ib);
  return rouge_l(IdSpan(ia), IdSpan(ib));
}
RougeScore rouge_n(const Tokens& a, const Tokens& b, int n) {
  TokenIds ia, ib;
  intern_pair(a, b, ia, ib);
  return rouge_n(IdSpan(ia), IdSpan(ib), n);
}
int multiset_overlap(const Tokens& a, const Tokens& b) {
  TokenIds ia, ib;
  intern_pair(a, b, ia, ib);
  return multiset_overlap(IdSpan(ia), IdSpan(ib));
}

RelationCheck check_relations(const MetricBundle& b, double d_w_base) {
  RelationCheck rc;
  const int max_n = std::max(b.n1, b.n2);
  const int min_n = std::min(b.n1, b.n2);

  bool ok = b.lcs >= b.n_max;
  ok = ok && b.n_max >= b.inplace_run;
  ok = ok && b.inplace_run >= b.n_pre;
  ok = ok && b.multiset >= b.lcs;
  ok = ok && b.n1 + b.n2 - 2 * b.lcs >= b.levenshtein;
  ok = ok && b.d1 >= max_n - b.lcs;
  ok = ok && 2 * (max_n - b.lcs) >= b.levenshtein;
  if (b.d_w > 0.0) {
    const double w = d_w_base;
    // Same iterated division as the distance itself, so the lower bound is
    // bit-compatible with the first-mismatch term; the upper bound gets a
    // relative slack for the accumulated tail rounding.
    double lo = 1.0;
    for (int j = 0; j <= b.n_pre; ++j) lo /= w;
    ok = ok && b.d_w >= lo;
    ok = ok && b.d_w < lo * (w / (w - 1.0)) * (1.0 + 1e-12);
  }
  if (b.rouge_l && b.n2 > 0) {
    ok = ok && *b.rouge_l >= static_cast<double>(b.n_max) / b.n2 - 1e-12;
    ok = ok && static_cast<double>(b.n_max) / b.n2 >=
                   static_cast<double>(b.n_pre) / b.n2 - 1e-12;
  }
  rc.chain_ok = ok;
  rc.prefix_link_ok = b.n_pre >= min_n - b.d1;
  return rc;
}

}  // namespace memaudit::metrics
