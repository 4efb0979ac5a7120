#include "memaudit/decomposition.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "memaudit/error.hpp"

namespace memaudit::decomposition {

CorrectnessMatrix::CorrectnessMatrix(std::vector<std::string> ids, int max_pos)
    : ids_(std::move(ids)), max_pos_(max_pos) {
  if (max_pos < 1) throw InvalidParameter("correctness matrix requires N >= 1");
  bits_.assign(ids_.size() * static_cast<std::size_t>(max_pos), 0);
  valid_len_.assign(ids_.size(), 0);
}

CorrectnessMatrix CorrectnessMatrix::from_pairs(
    const std::vector<ingest::SamplePair>& pairs, int max_pos) {
  std::vector<std::string> ids;
  ids.reserve(pairs.size());
  for (const auto& p : pairs) ids.push_back(p.id);
  CorrectnessMatrix m(std::move(ids), max_pos);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& gen = pairs[i].generated_tokens;
    const auto& ref = pairs[i].reference_tokens;
    const int valid = static_cast<int>(
        std::min({gen.size(), ref.size(), static_cast<std::size_t>(max_pos)}));
    m.valid_len_[i] = valid;
    for (int j = 0; j < valid; ++j) {
      m.bits_[i * static_cast<std::size_t>(max_pos) +
              static_cast<std::size_t>(j)] =
          gen[static_cast<std::size_t>(j)] == ref[static_cast<std::size_t>(j)]
              ? 1
              : 0;
    }
  }
  return m;
}

void CorrectnessMatrix::set_row(std::size_t i,
                                std::span<const std::uint8_t> bits) {
  const auto valid = std::min<std::size_t>(bits.size(),
                                           static_cast<std::size_t>(max_pos_));
  valid_len_[i] = static_cast<int>(valid);
  for (std::size_t j = 0; j < valid; ++j)
    bits_[i * static_cast<std::size_t>(max_pos_) + j] = bits[j] ? 1 : 0;
}

int CorrectnessMatrix::row_npre(std::size_t i) const {
  int n = 0;
  while (n < valid_len_[i] && bit(i, n + 1)) ++n;
  return n;
}

HazardProfile hazard_estimate(std::span<const int> npre) {
  if (npre.empty()) throw InsufficientData("hazard estimate of empty sample");
  int max_val = 0;
  for (const int v : npre) {
    if (v < 0) throw InvalidParameter("n_pre values must be >= 0");
    max_val = std::max(max_val, v);
  }
  // survivors[n] = #{n_pre >= n}, n = 0..max+1.
  std::vector<std::size_t> survivors(static_cast<std::size_t>(max_val) + 2, 0);
  for (const int v : npre) ++survivors[static_cast<std::size_t>(v)];
  for (std::size_t n = survivors.size() - 1; n-- > 0;)
    survivors[n] += survivors[n + 1];

  HazardProfile profile;
  for (int j = 1; survivors[static_cast<std::size_t>(j - 1)] > 0; ++j) {
    profile.at_risk.push_back(survivors[static_cast<std::size_t>(j - 1)]);
    profile.p_hat.push_back(
        static_cast<double>(survivors[static_cast<std::size_t>(j)]) /
        static_cast<double>(survivors[static_cast<std::size_t>(j - 1)]));
    if (static_cast<std::size_t>(j) + 1 >= survivors.size()) break;
  }
  return profile;
}

std::vector<double> survival_from_hazard(const HazardProfile& profile) {
  std::vector<double> s;
  s.reserve(profile.p_hat.size() + 1);
  s.push_back(1.0);
  double prod = 1.0;
  for (const double p : profile.p_hat) {
    prod *= p;
    s.push_back(prod);
  }
  return s;
}

double fit_geometric(std::span<const int> npre) {
  if (npre.empty()) throw InsufficientData("geometric fit of empty sample");
  double mean = 0.0;
  for (const int v : npre) mean += v;
  mean /= static_cast<double>(npre.size());
  return mean / (1.0 + mean);
}

LinearHazardFit fit_linear_hazard(const HazardProfile& profile, bool weighted,
                                  std::size_t min_at_risk) {
  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  std::size_t used = 0;
  for (std::size_t idx = 0; idx < profile.p_hat.size(); ++idx) {
    if (profile.at_risk[idx] < std::max<std::size_t>(min_at_risk, 1)) continue;
    const double x = static_cast<double>(idx + 1);
    const double y = profile.p_hat[idx];
    const double w =
        weighted ? static_cast<double>(profile.at_risk[idx]) : 1.0;
    sw += w;
    swx += w * x;
    swy += w * y;
    swxx += w * x * x;
    swxy += w * x * y;
    ++used;
  }
  if (used < 2)
    throw InsufficientData("linear hazard fit needs >= 2 usable positions");
  const double denom = sw * swxx - swx * swx;
  if (denom == 0.0)
    throw InsufficientData("linear hazard fit is degenerate");
  LinearHazardFit fit;
  fit.alpha = (sw * swxy - swx * swy) / denom;
  fit.p0 = (swy - fit.alpha * swx) / sw;
  return fit;
}

double linear_hazard_pmf(double alpha, double p0, int n) {
  if (n < 0) throw InvalidParameter("pmf position must be >= 0");
  auto hazard = [&](int j) {
    return std::clamp(alpha * static_cast<double>(j) + p0, 0.0, 1.0);
  };
  double prod = 1.0;
  for (int j = 1; j <= n; ++j) {
    prod *= hazard(j);
    if (prod == 0.0) return 0.0;
  }
  return prod * (1.0 - hazard(n + 1));
}

double mutual_information_counts(std::size_t n00, std::size_t n01,
                                 std::size_t n10, std::size_t n11) {
  const std::size_t total = n00 + n01 + n10 + n11;
  if (total == 0) throw InsufficientData("mutual information of empty sample");
  // Transposing the joint swaps the off-diagonal cells and leaves MI
  // unchanged; fixing their order makes the estimator bitwise symmetric.
  if (n01 > n10) std::swap(n01, n10);
  const double n = static_cast<double>(total);
  const double px1 = static_cast<double>(n10 + n11) / n;
  const double py1 = static_cast<double>(n01 + n11) / n;
  const double px0 = static_cast<double>(n00 + n01) / n;
  const double py0 = static_cast<double>(n00 + n10) / n;
  double mi = 0.0;
  auto add = [&](std::size_t cnt, double px, double py) {
    if (cnt == 0) return;  // 0 log 0 := 0
    const double pxy = static_cast<double>(cnt) / n;
    mi += pxy * std::log2(pxy / (px * py));
  };
  add(n00, px0, py0);
  add(n01, px0, py1);
  add(n10, px1, py0);
  add(n11, px1, py1);
  return std::max(0.0, mi);
}

double mutual_information_binary(std::span<const std::uint8_t> x,
                                 std::span<const std::uint8_t> y) {
  if (x.size() != y.size())
    throw InvalidParameter("mutual information requires equal-length vectors");
  if (x.empty())
    throw InsufficientData("mutual information of empty vectors");
  std::size_t n[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < x.size(); ++i)
    ++n[(x[i] ? 2u : 0u) | (y[i] ? 1u : 0u)];
  return mutual_information_counts(n[0], n[1], n[2], n[3]);
}

namespace {

MiEntry mi_pairwise_entry(const CorrectnessMatrix& m, int k, int j) {
  std::size_t n[4] = {0, 0, 0, 0};
  std::size_t rows = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (m.valid_len(i) < j) continue;
    ++rows;
    ++n[(m.bit(i, k) ? 2u : 0u) | (m.bit(i, j) ? 1u : 0u)];
  }
  MiEntry e;
  e.source = k;
  e.target = j;
  e.rows = rows;
  if (rows > 0) e.bits = mutual_information_counts(n[0], n[1], n[2], n[3]);
  return e;
}

MiEntry mi_conjunction_entry(const CorrectnessMatrix& m, int j) {
  std::size_t n[4] = {0, 0, 0, 0};
  std::size_t rows = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (m.valid_len(i) < j) continue;
    ++rows;
    bool all_prior = true;
    for (int k = 1; k < j && all_prior; ++k) all_prior = m.bit(i, k);
    ++n[(all_prior ? 2u : 0u) | (m.bit(i, j) ? 1u : 0u)];
  }
  MiEntry e;
  e.source = 0;
  e.target = j;
  e.rows = rows;
  if (rows > 0) e.bits = mutual_information_counts(n[0], n[1], n[2], n[3]);
  return e;
}

std::vector<std::pair<int, int>> mi_tasks(const CorrectnessMatrix& m,
                                          MiMode mode) {
  std::vector<std::pair<int, int>> tasks;
  if (mode == MiMode::pairwise) {
    for (int j = 2; j <= m.max_pos(); ++j)
      for (int k = 1; k < j; ++k) tasks.emplace_back(k, j);
  } else {
    for (int j = 2; j <= m.max_pos(); ++j) tasks.emplace_back(0, j);
  }
  return tasks;
}

std::vector<MiEntry> drop_empty(std::vector<MiEntry>& raw) {
  std::vector<MiEntry> out;
  out.reserve(raw.size());
  for (auto& e : raw)
    if (e.rows > 0) out.push_back(e);
  return out;
}

}  // namespace

MiMode parse_mi_mode(const std::string& name) {
  if (name == "pairwise") return MiMode::pairwise;
  if (name == "prefix-conjunction") return MiMode::prefix_conjunction;
  throw InvalidParameter("unknown MI mode: " + name);
}

std::vector<MiEntry> mi_profile(const CorrectnessMatrix& matrix, MiMode mode,
                                int threads) {
  if (matrix.rows() == 0)
    throw InsufficientData("MI profile of an empty matrix");
  const auto tasks = mi_tasks(matrix, mode);
  std::vector<MiEntry> raw(tasks.size());
  const auto n = static_cast<std::int64_t>(tasks.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4) \
    num_threads(threads > 0 ? threads : omp_get_max_threads())
#endif
  for (std::int64_t t = 0; t < n; ++t) {
    const auto [k, j] = tasks[static_cast<std::size_t>(t)];
    raw[static_cast<std::size_t>(t)] =
        mode == MiMode::pairwise ? mi_pairwise_entry(matrix, k, j)
                                 : mi_conjunction_entry(matrix, j);
  }
  (void)threads;
  return drop_empty(raw);
}

namespace reference {

std::vector<MiEntry> mi_profile(const CorrectnessMatrix& matrix, MiMode mode) {
  if (matrix.rows() == 0)
    throw InsufficientData("MI profile of an empty matrix");
  const auto tasks = mi_tasks(matrix, mode);
  std::vector<MiEntry> raw(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto [k, j] = tasks[t];
    raw[t] = mode == MiMode::pairwise ? mi_pairwise_entry(matrix, k, j)
                                      : mi_conjunction_entry(matrix, j);
  }
  return drop_empty(raw);
}

}  // namespace reference

}  // namespace memaudit::decomposition
