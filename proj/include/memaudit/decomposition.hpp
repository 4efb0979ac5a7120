#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memaudit/corpus.hpp"

namespace memaudit::decomposition {

// Per-sample, per-position match bits. Stored convention: 1 = correct
// (generated token equals reference token); serialized outputs carry the
// convention explicitly.
inline constexpr const char* kBitConvention = "1=correct";

class CorrectnessMatrix {
public:
  CorrectnessMatrix() = default;
  CorrectnessMatrix(std::vector<std::string> ids, int max_pos);

  static CorrectnessMatrix from_pairs(
      const std::vector<ingest::SamplePair>& pairs, int max_pos);

  // Rows may also be assembled from previously serialized bit rows.
  void set_row(std::size_t i, std::span<const std::uint8_t> bits);

  std::size_t rows() const { return ids_.size(); }
  int max_pos() const { return max_pos_; }
  const std::vector<std::string>& ids() const { return ids_; }
  int valid_len(std::size_t i) const { return valid_len_[i]; }
  // Position j is 1-based.
  bool bit(std::size_t i, int j) const {
    return bits_[i * static_cast<std::size_t>(max_pos_) +
                 static_cast<std::size_t>(j - 1)] != 0;
  }
  // Leading run of correct bits, capped at valid_len.
  int row_npre(std::size_t i) const;

private:
  std::vector<std::string> ids_;
  int max_pos_ = 0;
  std::vector<std::uint8_t> bits_;  // row-major, masked past valid_len
  std::vector<int> valid_len_;
};

struct HazardProfile {
  // p_hat[j-1] estimates the continuation probability at position j; defined
  // for j = 1..size() where the at-risk count is positive.
  std::vector<double> p_hat;
  // at_risk[j-1] = #{n_pre >= j-1}, the denominator behind p_hat[j-1].
  std::vector<std::size_t> at_risk;
  std::optional<double> geometric_p;
  std::optional<double> linear_alpha;
  std::optional<double> linear_p0;
};

HazardProfile hazard_estimate(std::span<const int> npre);

// S(0..J): S(0) = 1, S(n) = prod_{j<=n} p_hat(j).
std::vector<double> survival_from_hazard(const HazardProfile& profile);

// Maximum-likelihood p for P(N = n) = p^n (1-p): mean / (1 + mean).
double fit_geometric(std::span<const int> npre);

struct LinearHazardFit {
  double alpha = 0.0;
  double p0 = 0.0;
};

// Weighted least squares of p_hat(j) on j; weights are the at-risk counts
// when enabled. Positions below min_at_risk are excluded.
LinearHazardFit fit_linear_hazard(const HazardProfile& profile, bool weighted,
                                  std::size_t min_at_risk);

// P(N = n) under hazards p_j = clamp(alpha j + p0, 0, 1), by direct product.
double linear_hazard_pmf(double alpha, double p0, int n);

// Plug-in estimator from the empirical 2x2 joint, in bits; never negative.
double mutual_information_binary(std::span<const std::uint8_t> x,
                                 std::span<const std::uint8_t> y);
double mutual_information_counts(std::size_t n00, std::size_t n01,
                                 std::size_t n10, std::size_t n11);

enum class MiMode { pairwise, prefix_conjunction };
MiMode parse_mi_mode(const std::string& name);

struct MiEntry {
  // Pairwise mode: source = earlier position k (< target). Conjunction mode:
  // source = 0, meaning the conjunction of all positions before target.
  int source = 0;
  int target = 0;
  double bits = 0.0;
  std::size_t rows = 0;  // samples with valid_len >= target
};

// Entries sorted by (target, source); position pairs with no valid rows are
// omitted. Column-pair parallel; deterministic for any thread count.
std::vector<MiEntry> mi_profile(const CorrectnessMatrix& matrix, MiMode mode,
                                int threads);

namespace reference {
std::vector<MiEntry> mi_profile(const CorrectnessMatrix& matrix, MiMode mode);
}  // namespace reference

}  // namespace memaudit::decomposition
