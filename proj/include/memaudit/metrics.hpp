#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memaudit/corpus.hpp"

namespace memaudit::metrics {

using TokenIds = std::vector<std::int32_t>;
using IdSpan = std::span<const std::int32_t>;
using Tokens = std::vector<std::string>;

// Maps the tokens of one pair onto dense ids (first-appearance order) so the
// quadratic kernels compare integers instead of strings.
void intern_pair(const Tokens& a, const Tokens& b, TokenIds& out_a,
                 TokenIds& out_b);

int prefix_match_length(IdSpan generated, IdSpan reference);
int lcs_length(IdSpan a, IdSpan b);
int levenshtein_words(IdSpan a, IdSpan b);
int max_shared_ngram(IdSpan a, IdSpan b);

struct InplaceStats {
  int run = 0;      // longest run of positional matches
  int d1 = 0;       // mismatch count over the padded length
  int matched = 0;  // max(N1,N2) - d1
};
InplaceStats inplace_stats(IdSpan a, IdSpan b);

// Positional mismatch indicators c_1..c_max(N1,N2) under the padding
// convention: a position where only one side has a token counts as a
// mismatch.
std::vector<std::uint8_t> mismatch_vector(IdSpan a, IdSpan b);

// Sum over j=1..truncation of base^-j * c_j. Requires base > 1.
double weighted_distance(IdSpan a, IdSpan b, double base, int truncation);
double weighted_distance_from_mismatches(std::span<const std::uint8_t> c,
                                         double base, int truncation);

// Multiset intersection size over token counts.
int multiset_overlap(IdSpan a, IdSpan b);

double rouge_l(IdSpan generated, IdSpan reference);  // throws on empty reference

struct RougeScore {
  double recall = 0.0;
  double precision = 0.0;
};
// Clipped multiset overlap of contiguous n-grams. Throws when either
// sequence is shorter than n.
RougeScore rouge_n(IdSpan generated, IdSpan reference, int n);

struct RougeNEntry {
  int n = 0;
  std::optional<double> precision;
  std::optional<double> recall;
};

struct MetricBundle {
  int n_pre = 0;
  int lcs = 0;
  int levenshtein = 0;
  int n_max = 0;
  int inplace_run = 0;
  int d1 = 0;
  double d_w = 0.0;
  std::optional<double> rouge_l;
  std::vector<RougeNEntry> rouge_n;
  int n1 = 0;  // generated length
  int n2 = 0;  // reference length
  int multiset = 0;
  std::vector<std::uint8_t> correct_bits;  // 1 = positional match, up to valid_len
};

struct MetricConfig {
  std::vector<int> rouge_ns{1, 2};
  double d_w_base = 3.0;
  int d_w_truncation = 0;  // 0 = max(N1, N2)
  int max_pos = 128;       // cap for correct_bits
};

MetricBundle metric_bundle(const Tokens& generated, const Tokens& reference,
                           const MetricConfig& cfg);
MetricBundle metric_bundle(const ingest::SamplePair& pair,
                           const MetricConfig& cfg);

// String-token conveniences for the individual operations.
int prefix_match_length(const Tokens& a, const Tokens& b);
int lcs_length(const Tokens& a, const Tokens& b);
int levenshtein_words(const Tokens& a, const Tokens& b);
int max_shared_ngram(const Tokens& a, const Tokens& b);
InplaceStats inplace_stats(const Tokens& a, const Tokens& b);
double weighted_distance(const Tokens& a, const Tokens& b, double base,
                         int truncation);
double rouge_l(const Tokens& a, const Tokens& b);
RougeScore rouge_n(const Tokens& a, const Tokens& b, int n);
int multiset_overlap(const Tokens& a, const Tokens& b);

struct RelationCheck {
  bool chain_ok = true;  // ordering chain, edit-distance bounds, d_w band
  bool prefix_link_ok = true;  // n_pre >= min(N1,N2) - d1 (reported, not asserted)
};
RelationCheck check_relations(const MetricBundle& b, double d_w_base);

}  // namespace memaudit::metrics
