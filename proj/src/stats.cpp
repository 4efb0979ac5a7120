#include "memaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "memaudit/error.hpp"

namespace memaudit::stats {

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

namespace {

struct SignedRanks {
  std::vector<double> ranks;  // midranks of |d|
  std::vector<bool> positive;
  std::size_t zeros = 0;
};

SignedRanks signed_ranks(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw InvalidParameter("paired samples must have equal length");
  std::vector<double> abs_d;
  std::vector<bool> positive;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d == 0.0) {
      ++zeros;
      continue;
    }
    abs_d.push_back(std::abs(d));
    positive.push_back(d > 0.0);
  }
  return {midranks(abs_d), std::move(positive), zeros};
}

// Exact null distribution of 2*W+ by dynamic programming over doubled
// midranks (doubling keeps every rank integral). counts[s] = number of sign
// assignments with doubled rank-sum s.
std::vector<std::uint64_t> wplus_counts(const std::vector<double>& ranks) {
  std::size_t total = 0;
  std::vector<std::size_t> doubled(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    doubled[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
    total += doubled[i];
  }
  std::vector<std::uint64_t> counts(total + 1, 0);
  counts[0] = 1;
  std::size_t reach = 0;
  for (const std::size_t r : doubled) {
    reach += r;
    for (std::size_t s = reach + 1; s-- > r;) counts[s] += counts[s - r];
  }
  return counts;
}

double exact_two_sided_p(const std::vector<double>& ranks, double w_plus) {
  const auto counts = wplus_counts(ranks);
  const auto w2 = static_cast<std::size_t>(std::llround(2.0 * w_plus));
  std::uint64_t le = 0, ge = 0, total = 0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    total += counts[s];
    if (s <= w2) le += counts[s];
    if (s >= w2) ge += counts[s];
  }
  const double p_le = static_cast<double>(le) / static_cast<double>(total);
  const double p_ge = static_cast<double>(ge) / static_cast<double>(total);
  return std::min(1.0, 2.0 * std::min(p_le, p_ge));
}

double normal_two_sided_p(const std::vector<double>& ranks, double w_plus) {
  const double n = static_cast<double>(ranks.size());
  const double mu = n * (n + 1.0) / 4.0;
  double sigma2 = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
  // Tie correction: subtract sum(t^3 - t)/48 over tie groups.
  std::vector<double> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    sigma2 -= (t * t * t - t) / 48.0;
    i = j;
  }
  if (sigma2 <= 0.0) throw DegenerateSample("zero variance in signed-rank test");
  double delta = w_plus - mu;
  // Continuity correction toward the mean.
  if (delta > 0.5) {
    delta -= 0.5;
  } else if (delta < -0.5) {
    delta += 0.5;
  } else {
    delta = 0.0;
  }
  const double z = delta / std::sqrt(sigma2);
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x,
                                    std::span<const double> y,
                                    WilcoxonMethod method) {
  const auto sr = signed_ranks(x, y);
  if (sr.ranks.empty())
    throw DegenerateSample("all paired differences are zero");

  WilcoxonResult r;
  r.zeros_dropped = sr.zeros;
  r.n_effective = sr.ranks.size();
  double total = 0.0;
  for (std::size_t i = 0; i < sr.ranks.size(); ++i) {
    total += sr.ranks[i];
    if (sr.positive[i]) r.w_plus += sr.ranks[i];
  }
  r.w_minus = total - r.w_plus;
  r.w = std::min(r.w_plus, r.w_minus);

  const bool exact = method == WilcoxonMethod::exact ||
                     (method == WilcoxonMethod::automatic &&
                      r.n_effective <= kWilcoxonExactLimit);
  if (exact) {
    r.method = WilcoxonMethod::exact;
    r.p_value = exact_two_sided_p(sr.ranks, r.w_plus);
  } else {
    r.method = WilcoxonMethod::normal;
    r.p_value = normal_two_sided_p(sr.ranks, r.w_plus);
  }
  return r;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw InvalidParameter("spearman requires equal-length vectors");
  if (x.size() < 2) throw InsufficientData("spearman requires >= 2 points");
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DegenerateSample("spearman undefined for constant ranks");
  return sxy / std::sqrt(sxx * syy);
}

double entropy_bits(std::span<const double> p) {
  double sum = 0.0;
  for (const double v : p) {
    if (v < 0.0) throw InvalidParameter("probabilities must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidParameter("probabilities must sum to 1");
  double h = 0.0;
  for (const double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return std::max(0.0, h);
}

}  // namespace memaudit::stats
