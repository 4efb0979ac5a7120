#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memaudit::oracle {

// Explicit finite distribution over equal-length token sequences. The first
// prefix_len tokens of each sequence act as the conditioning prefix; the
// remainder is the suffix space that classifiers predict over.
struct ToyDistribution {
  std::vector<std::string> alphabet;               // sorted, tie-break order
  std::vector<std::vector<std::int32_t>> seqs;     // ids into alphabet
  std::vector<double> probs;                       // normalized, positive
  int prefix_len = 0;

  int seq_len() const {
    return seqs.empty() ? 0 : static_cast<int>(seqs[0].size());
  }
  int suffix_len() const { return seq_len() - prefix_len; }
  std::vector<std::string> tokens_of(std::size_t i) const;

  static ToyDistribution from_weighted(
      const std::vector<std::pair<std::vector<std::string>, double>>& entries,
      int prefix_len);

  // Text format: '#' comments, optional "@prefix_len K" directive, data
  // lines "<weight> tok tok ...".
  static ToyDistribution parse(const std::string& text);
  static ToyDistribution load_file(const std::string& path);
  std::string serialize() const;
};

// Enumeration guards; exceeding them is a hard error, never silent sampling.
inline constexpr std::size_t kMaxAlphabet = 8;
inline constexpr int kMaxSuffixLen = 8;

struct PrefixPrediction {
  std::vector<std::string> prefix;
  std::vector<std::string> predicted;
  double prefix_prob = 0.0;
  double full_match_prob = 0.0;  // conditional on the prefix
};

struct ClassifierResult {
  std::vector<PrefixPrediction> predictions;  // prefix-lexicographic order
  double expected_full_match = 0.0;
  double bayes_risk = 0.0;  // 1 - expected_full_match
  // Conditional match probability at each step given survival so far,
  // aggregated over prefixes by survival mass.
  std::vector<double> per_position_match;
};

// Full-suffix argmax classifier; ties broken lexicographically.
ClassifierResult bayes_optimal(const ToyDistribution& dist, int n);

// Greedy per-token argmax classifier. tie_order, when given, ranks token ids
// for tie-breaking (lower rank wins); default is lexicographic.
ClassifierResult termwise_boc(const ToyDistribution& dist, int n,
                              const std::vector<int>* tie_order = nullptr);

using TokenDist = std::map<std::string, double>;

// Probability that a token sampled from q equals one sampled from p:
// sum_i p_i q_i. Alphabets must coincide.
double expected_match_under_sampling(const TokenDist& p, const TokenDist& q);

struct GreedyComparison {
  std::vector<bool> matches;       // greedy token equals term-wise token
  std::vector<bool> argmax_agree;  // argmaxes of the two dists agree on the greedy path
};

GreedyComparison greedy_matches_termwise(const ToyDistribution& pi,
                                         const ToyDistribution& pi_m, int n);

struct KlResult {
  double nats = 0.0;
  bool finite = true;  // false when pi has mass outside pi_m's support
};

// KL over full sequences, natural log.
KlResult kl_divergence(const ToyDistribution& pi, const ToyDistribution& pi_m);

// Position-wise decomposition; entries sum to the sequence-level divergence.
std::vector<KlResult> kl_per_position(const ToyDistribution& pi,
                                      const ToyDistribution& pi_m);

struct SimulateModel {
  enum class Kind { geometric, linear };
  Kind kind = Kind::geometric;
  double p = 0.5;      // geometric continuation probability
  double alpha = 0.0;  // linear hazard slope
  double p0 = 0.5;     // linear hazard intercept
};

// I.i.d. match-length draws: position j continues with probability p or
// clamp(alpha j + p0, 0, 1), truncated at max_len. Draw i uses seed ^ i.
std::vector<int> simulate_npre(const SimulateModel& model, std::size_t count,
                               int max_len, std::uint64_t seed);

struct GapResult {
  double boc_full_match = 0.0;
  double termwise_full_match = 0.0;
  std::optional<int> divergence_index;  // 1-based first differing position
};

GapResult boc_vs_termwise_gap(const ToyDistribution& dist, int n);

// Deterministic random instance generator for the property suites.
ToyDistribution random_instance(std::uint64_t seed, std::size_t max_alphabet,
                                int max_len, int prefix_len = 0);

}  // namespace memaudit::oracle
