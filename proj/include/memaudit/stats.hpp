#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace memaudit::stats {

std::vector<double> midranks(std::span<const double> values);

enum class WilcoxonMethod { automatic, exact, normal };

struct WilcoxonResult {
  double w_plus = 0.0;
  double w_minus = 0.0;
  double w = 0.0;  // min(w_plus, w_minus)
  double p_value = 1.0;
  std::size_t n_effective = 0;
  std::size_t zeros_dropped = 0;
  WilcoxonMethod method = WilcoxonMethod::exact;
};

// Two-sided signed-rank test on paired samples. Zero differences are dropped
// (count reported); ties midranked. Exact null enumeration up to
// n_effective = 25, tie- and continuity-corrected normal approximation above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x,
                                    std::span<const double> y,
                                    WilcoxonMethod method = WilcoxonMethod::automatic);

inline constexpr std::size_t kWilcoxonExactLimit = 25;

// Pearson correlation of midranks. Throws on constant input.
double spearman_rho(std::span<const double> x, std::span<const double> y);

// Shannon entropy in bits; distribution must sum to 1 within 1e-9.
double entropy_bits(std::span<const double> p);

}  // namespace memaudit::stats
