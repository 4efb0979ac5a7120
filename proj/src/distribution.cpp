#include "memaudit/distribution.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "memaudit/error.hpp"
#include "memaudit/rng.hpp"

namespace memaudit::distribution {

Ecdf Ecdf::from_values(std::span<const int> values) {
  if (values.empty()) throw InsufficientData("ecdf requires a non-empty sample");
  std::vector<int> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  Ecdf e;
  e.total_ = sorted.size();
  std::size_t cum = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    cum += j - i;
    e.values_.push_back(sorted[i]);
    e.counts_.push_back(j - i);
    e.cum_.push_back(static_cast<double>(cum) /
                     static_cast<double>(sorted.size()));
    i = j;
  }
  e.cum_.back() = 1.0;
  return e;
}

Ecdf Ecdf::from_steps(std::vector<std::pair<int, double>> steps) {
  if (steps.empty()) throw InvalidParameter("ecdf steps must be non-empty");
  std::sort(steps.begin(), steps.end());
  Ecdf e;
  double prev = 0.0;
  for (const auto& [v, f] : steps) {
    if (f < prev || f > 1.0)
      throw InvalidParameter("ecdf steps must be nondecreasing in [0,1]");
    e.values_.push_back(v);
    e.cum_.push_back(f);
    prev = f;
  }
  if (e.cum_.back() != 1.0)
    throw InvalidParameter("ecdf must reach 1 at the largest support value");
  return e;
}

double Ecdf::at(int n) const {
  auto it = std::upper_bound(values_.begin(), values_.end(), n);
  if (it == values_.begin()) return 0.0;
  return cum_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

double Ecdf::below(int n) const {
  // P(X < n) = P(X <= n-1) on integer support.
  return at(n - 1);
}

int type1_quantile(std::span<const int> sorted_values, double q) {
  if (sorted_values.empty())
    throw InsufficientData("quantile of empty sample");
  if (q < 0.0 || q > 1.0) throw InvalidParameter("quantile level outside [0,1]");
  const auto m = sorted_values.size();
  std::size_t k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(m)));
  if (k < 1) k = 1;
  if (k > m) k = m;
  return sorted_values[k - 1];
}

double type1_quantile(std::span<const double> sorted_values, double q) {
  if (sorted_values.empty())
    throw InsufficientData("quantile of empty sample");
  if (q < 0.0 || q > 1.0) throw InvalidParameter("quantile level outside [0,1]");
  const auto m = sorted_values.size();
  std::size_t k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(m)));
  if (k < 1) k = 1;
  if (k > m) k = m;
  return sorted_values[k - 1];
}

DistributionSummary summarize(std::span<const int> values,
                              std::span<const int> ks,
                              std::span<const double> qs) {
  if (values.empty()) throw InsufficientData("summarize requires a non-empty sample");
  DistributionSummary s;
  s.m = values.size();

  const Ecdf ecdf = Ecdf::from_values(values);
  for (std::size_t i = 0; i < ecdf.support().size(); ++i)
    s.ecdf.push_back(
        {ecdf.support()[i], ecdf.counts()[i], ecdf.cumulative()[i]});

  std::vector<int> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.max = sorted.back();

  int depth = 0;
  for (const int k : ks) depth = std::max(depth, k);
  depth = std::min<int>(depth, static_cast<int>(sorted.size()));
  for (int i = 0; i < depth; ++i)
    s.topk_curve.push_back(sorted[sorted.size() - 1 - static_cast<std::size_t>(i)]);

  for (const double q : qs) s.quantiles.emplace_back(q, type1_quantile(sorted, q));

  const double m = static_cast<double>(values.size());
  double mean = 0.0;
  for (const int v : values) mean += v;
  mean /= m;
  s.mean = mean;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (const int v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= m;
  m3 /= m;
  m4 /= m;
  if (m2 > 0.0) {
    const double g1 = m3 / std::pow(m2, 1.5);
    const double g2 = m4 / (m2 * m2) - 3.0;
    s.skewness = g1;
    s.excess_kurtosis = g2;
    s.jarque_bera = m * (g1 * g1 / 6.0 + g2 * g2 / 24.0);
  }
  return s;
}

double prob_missing_topk(std::size_t m, std::size_t k, std::size_t z) {
  if (k < 1 || k > m) throw InvalidParameter("prob_missing_topk requires 1 <= k <= M");
  if (z > m) throw InvalidParameter("prob_missing_topk requires z <= M");
  if (z == 0) return 1.0;
  if (z > m - k) return 0.0;
  // C(M-k, z) / C(M, z) = prod_{i=0..k-1} (M-z-i) / (M-i); k factors keep
  // the rounding error small even at M ~ 1e4.
  double p = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    p *= static_cast<double>(m - z - i) / static_cast<double>(m - i);
  }
  return p;
}

double prob_max_below(const Ecdf& ecdf, std::size_t z, int n) {
  if (z < 1) throw InvalidParameter("prob_max_below requires z >= 1");
  return std::pow(ecdf.below(n), static_cast<double>(z));
}

std::vector<std::pair<int, double>> sampled_max_pmf(const Ecdf& ecdf,
                                                    std::size_t z) {
  if (z < 1) throw InvalidParameter("sampled_max_pmf requires z >= 1");
  std::vector<std::pair<int, double>> pmf;
  double prev = 0.0;
  for (std::size_t i = 0; i < ecdf.support().size(); ++i) {
    const double cur = std::pow(ecdf.cumulative()[i], static_cast<double>(z));
    pmf.emplace_back(ecdf.support()[i], cur - prev);
    prev = cur;
  }
  return pmf;
}

std::string Statistic::name() const {
  switch (kind) {
    case Kind::max:
      return "max";
    case Kind::mean:
      return "mean";
    case Kind::quantile:
      return "quantile:" + std::to_string(q);
    case Kind::topk_mean:
      return "topk-mean:" + std::to_string(k);
  }
  return "?";
}

Statistic parse_statistic(const std::string& name) {
  Statistic st;
  if (name == "max") {
    st.kind = Statistic::Kind::max;
    return st;
  }
  if (name == "mean") {
    st.kind = Statistic::Kind::mean;
    return st;
  }
  if (name.rfind("quantile:", 0) == 0) {
    st.kind = Statistic::Kind::quantile;
    try {
      st.q = std::stod(name.substr(9));
    } catch (const std::exception&) {
      throw InvalidParameter("bad quantile level in statistic: " + name);
    }
    if (st.q < 0.0 || st.q > 1.0)
      throw InvalidParameter("quantile level outside [0,1]: " + name);
    return st;
  }
  if (name.rfind("topk-mean:", 0) == 0) {
    st.kind = Statistic::Kind::topk_mean;
    try {
      st.k = std::stoi(name.substr(10));
    } catch (const std::exception&) {
      throw InvalidParameter("bad k in statistic: " + name);
    }
    if (st.k < 1) throw InvalidParameter("topk-mean requires k >= 1");
    return st;
  }
  throw InvalidParameter("unknown statistic: " + name);
}

double eval_statistic(const Statistic& stat, std::span<const int> values) {
  if (values.empty()) throw InsufficientData("statistic of empty sample");
  switch (stat.kind) {
    case Statistic::Kind::max:
      return *std::max_element(values.begin(), values.end());
    case Statistic::Kind::mean: {
      double s = 0.0;
      for (const int v : values) s += v;
      return s / static_cast<double>(values.size());
    }
    case Statistic::Kind::quantile: {
      std::vector<int> sorted(values.begin(), values.end());
      std::sort(sorted.begin(), sorted.end());
      return type1_quantile(sorted, stat.q);
    }
    case Statistic::Kind::topk_mean: {
      std::vector<int> sorted(values.begin(), values.end());
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      const std::size_t depth =
          std::min<std::size_t>(static_cast<std::size_t>(stat.k), sorted.size());
      double s = 0.0;
      for (std::size_t i = 0; i < depth; ++i) s += sorted[i];
      return s / static_cast<double>(depth);
    }
  }
  throw InternalError("unreachable statistic kind");
}

namespace {

double replicate_value(std::span<const int> values, const Statistic& stat,
                       std::uint64_t seed, std::uint64_t index,
                       std::vector<int>& scratch) {
  auto eng = rng::replicate_engine(seed, index);
  const auto m = values.size();
  scratch.resize(m);
  for (std::size_t j = 0; j < m; ++j) scratch[j] = values[eng.bounded(m)];
  return eval_statistic(stat, scratch);
}

BootstrapResult finish(std::span<const int> values, const Statistic& stat,
                       std::vector<double>& reps, std::uint64_t seed,
                       double level) {
  std::sort(reps.begin(), reps.end());
  BootstrapResult r;
  r.statistic = stat.name();
  r.point = eval_statistic(stat, values);
  const double alpha = 1.0 - level;
  r.lo = type1_quantile(std::span<const double>(reps), alpha / 2.0);
  r.hi = type1_quantile(std::span<const double>(reps), 1.0 - alpha / 2.0);
  r.level = level;
  r.seed = seed;
  r.replicates = static_cast<std::uint32_t>(reps.size());
  r.rng = std::string(rng::kAlgorithm);
  return r;
}

}  // namespace

BootstrapResult bootstrap(std::span<const int> values, const Statistic& stat,
                          std::uint32_t b, std::uint64_t seed, double level,
                          int threads) {
  if (b < 1) throw InvalidParameter("bootstrap requires B >= 1");
  if (values.empty()) throw InsufficientData("bootstrap of empty sample");
  if (level <= 0.0 || level >= 1.0)
    throw InvalidParameter("bootstrap level must be in (0,1)");
  std::vector<double> reps(b);
#ifdef _OPENMP
#pragma omp parallel num_threads(threads > 0 ? threads : omp_get_max_threads())
  {
    std::vector<int> scratch;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(b); ++i)
      reps[i] = replicate_value(values, stat, seed,
                                static_cast<std::uint64_t>(i), scratch);
  }
#else
  (void)threads;
  std::vector<int> scratch;
  for (std::uint32_t i = 0; i < b; ++i)
    reps[i] = replicate_value(values, stat, seed, i, scratch);
#endif
  return finish(values, stat, reps, seed, level);
}

namespace reference {

BootstrapResult bootstrap(std::span<const int> values, const Statistic& stat,
                          std::uint32_t b, std::uint64_t seed, double level) {
  if (b < 1) throw InvalidParameter("bootstrap requires B >= 1");
  if (values.empty()) throw InsufficientData("bootstrap of empty sample");
  if (level <= 0.0 || level >= 1.0)
    throw InvalidParameter("bootstrap level must be in (0,1)");
  std::vector<double> reps(b);
  std::vector<int> scratch;
  for (std::uint32_t i = 0; i < b; ++i)
    reps[i] = replicate_value(values, stat, seed, i, scratch);
  return finish(values, stat, reps, seed, level);
}

}  // namespace reference

}  // namespace memaudit::distribution
