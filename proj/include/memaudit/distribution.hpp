#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "memaudit/corpus.hpp"

namespace memaudit::distribution {

struct MemorizationSample {
  std::vector<int> values;  // one n_pre per scored record
  ingest::RunMetadata run;
};

// Step function F(n) = P(X <= n) over integer support.
class Ecdf {
public:
  static Ecdf from_values(std::span<const int> values);
  // Support values paired with cumulative probabilities; the last entry must
  // reach 1.
  static Ecdf from_steps(std::vector<std::pair<int, double>> steps);

  double at(int n) const;     // P(X <= n)
  double below(int n) const;  // P(X < n)
  const std::vector<int>& support() const { return values_; }
  const std::vector<double>& cumulative() const { return cum_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  std::size_t total() const { return total_; }

private:
  std::vector<int> values_;          // sorted unique
  std::vector<double> cum_;          // cumulative fractions
  std::vector<std::size_t> counts_;  // per-value counts (empty for from_steps)
  std::size_t total_ = 0;
};

struct EcdfEntry {
  int value = 0;
  std::size_t count = 0;
  double cumulative = 0.0;
};

struct DistributionSummary {
  std::vector<EcdfEntry> ecdf;
  std::vector<std::pair<double, int>> quantiles;  // (q, value)
  int max = 0;
  std::vector<int> topk_curve;  // largest values, descending
  double mean = 0.0;
  std::optional<double> skewness;
  std::optional<double> excess_kurtosis;
  std::optional<double> jarque_bera;
  std::size_t m = 0;
};

// ks selects how deep the top-k curve goes (max of the list); qs are the
// quantile levels. Lower empirical (type-1) quantiles throughout.
DistributionSummary summarize(std::span<const int> values,
                              std::span<const int> ks,
                              std::span<const double> qs);

inline DistributionSummary summarize(const MemorizationSample& sample,
                                     std::span<const int> ks,
                                     std::span<const double> qs) {
  return summarize(std::span<const int>(sample.values), ks, qs);
}

int type1_quantile(std::span<const int> sorted_values, double q);
double type1_quantile(std::span<const double> sorted_values, double q);

// Probability that a uniform without-replacement sample of size z contains
// none of the k largest of M population members: C(M-k, z) / C(M, z).
double prob_missing_topk(std::size_t m, std::size_t k, std::size_t z);

// With-replacement approximation P(max of z draws < n) = F(n-1)^z.
double prob_max_below(const Ecdf& ecdf, std::size_t z, int n);

// P(max of z draws = v) over the support, via F(v)^z - F(v-)^z.
std::vector<std::pair<int, double>> sampled_max_pmf(const Ecdf& ecdf,
                                                    std::size_t z);

struct Statistic {
  enum class Kind { max, mean, quantile, topk_mean };
  Kind kind = Kind::mean;
  double q = 0.5;  // quantile level
  int k = 1;       // top-k depth
  std::string name() const;
};

// Accepts "max", "mean", "quantile:Q", "topk-mean:K".
Statistic parse_statistic(const std::string& name);

double eval_statistic(const Statistic& stat, std::span<const int> values);

struct BootstrapResult {
  std::string statistic;
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::uint32_t replicates = 0;
  std::string rng;
};

// B with-replacement resamples of size M; percentile interval. Replicate i
// draws from seed ^ i, so results are identical for any thread count.
BootstrapResult bootstrap(std::span<const int> values, const Statistic& stat,
                          std::uint32_t b, std::uint64_t seed, double level,
                          int threads);

namespace reference {
BootstrapResult bootstrap(std::span<const int> values, const Statistic& stat,
                          std::uint32_t b, std::uint64_t seed, double level);
}  // namespace reference

}  // namespace memaudit::distribution
