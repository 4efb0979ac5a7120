#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "memaudit/error.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/stats.hpp"

using namespace memaudit;

namespace {

// Independent oracle: enumerate all 2^n sign assignments over the midranks of
// |d| and accumulate the null counts of 2*W+ directly.
double wilcoxon_exact_oracle(const std::vector<double>& x,
                             const std::vector<double>& y, double* w_plus_out) {
  std::vector<double> abs_d;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d == 0.0) continue;
    abs_d.push_back(std::abs(d));
    positive.push_back(d > 0.0);
  }
  const std::size_t n = abs_d.size();
  // Midranks via a simple sort-based pass, independent of the library path.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && abs_d[order[j]] == abs_d[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k)
      rank[order[k]] = static_cast<double>(i + 1 + j) / 2.0;
    i = j;
  }
  double w_plus = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (positive[k]) w_plus += rank[k];
  if (w_plus_out) *w_plus_out = w_plus;

  const auto w2 = static_cast<long long>(std::llround(2.0 * w_plus));
  std::uint64_t le = 0, ge = 0;
  const std::uint64_t total = 1ull << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double w = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (mask & (1ull << k)) w += rank[k];
    const auto s = static_cast<long long>(std::llround(2.0 * w));
    if (s <= w2) ++le;
    if (s >= w2) ++ge;
  }
  const double p_le = static_cast<double>(le) / static_cast<double>(total);
  const double p_ge = static_cast<double>(ge) / static_cast<double>(total);
  return std::min(1.0, 2.0 * std::min(p_le, p_ge));
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("midranks with ties") {
  const std::vector<double> v{1.0, 1.0, 2.0};
  CHECK(stats::midranks(v) == std::vector<double>{1.5, 1.5, 3.0});
  const std::vector<double> w{3.0, 1.0, 2.0};
  CHECK(stats::midranks(w) == std::vector<double>{3.0, 1.0, 2.0});
}

TEST_CASE("wilcoxon degenerate and all-positive cases") {
  const std::vector<double> x{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(stats::wilcoxon_signed_rank(x, x), DegenerateSample);

  const std::vector<double> y{0.0, 0.0, 0.0};
  const auto r = stats::wilcoxon_signed_rank(x, y);
  CHECK(r.w_minus == 0.0);
  CHECK(r.w_plus == 6.0);
  CHECK(r.p_value == 0.25);  // 2/8 under exact enumeration
  CHECK(r.n_effective == 3);
  CHECK(r.method == stats::WilcoxonMethod::exact);
}

TEST_CASE("zero differences are dropped and reported") {
  const std::vector<double> x{5.0, 1.0, 2.0, 3.0};
  const std::vector<double> y{5.0, 0.0, 0.0, 0.0};
  const auto r = stats::wilcoxon_signed_rank(x, y);
  CHECK(r.zeros_dropped == 1);
  CHECK(r.n_effective == 3);
  CHECK(r.p_value == 0.25);
}

TEST_CASE("exact path matches the enumeration oracle bit for bit") {
  rng::Engine eng(81);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + eng.bounded(9);  // n <= 10
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse integer grid so ties and zeros genuinely occur.
      x[i] = static_cast<double>(eng.bounded(6));
      y[i] = static_cast<double>(eng.bounded(6));
    }
    double w_oracle = 0.0;
    const double p_oracle = wilcoxon_exact_oracle(x, y, &w_oracle);
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i)
      if (x[i] != y[i]) all_zero = false;
    if (all_zero) continue;
    const auto r = stats::wilcoxon_signed_rank(x, y, stats::WilcoxonMethod::exact);
    REQUIRE(r.p_value == p_oracle);
    REQUIRE(r.w_plus == w_oracle);
  }
}

TEST_CASE("exact and normal approximations agree at n = 25") {
  rng::Engine eng(82);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 25;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = eng.uniform();
      y[i] = eng.uniform();
    }
    const auto exact = stats::wilcoxon_signed_rank(x, y, stats::WilcoxonMethod::exact);
    const auto normal =
        stats::wilcoxon_signed_rank(x, y, stats::WilcoxonMethod::normal);
    REQUIRE(std::abs(exact.p_value - normal.p_value) <= 0.01);
  }
}

TEST_CASE("null p-values are roughly uniform") {
  rng::Engine eng(83);
  const int trials = 2000;
  std::vector<double> ps;
  ps.reserve(trials);
  std::vector<double> x(40), y(40);
  for (int t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = eng.uniform();
      y[i] = eng.uniform();
    }
    ps.push_back(stats::wilcoxon_signed_rank(x, y).p_value);
  }
  std::sort(ps.begin(), ps.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double f = static_cast<double>(i + 1) / trials;
    ks = std::max(ks, std::abs(f - ps[i]));
    ks = std::max(ks, std::abs(static_cast<double>(i) / trials - ps[i]));
  }
  CHECK(ks < 0.04);
}

TEST_CASE("spearman rho") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> up{10.0, 20.0, 25.0, 90.0};
  const std::vector<double> down{8.0, 7.0, 5.0, 1.0};
  CHECK(stats::spearman_rho(x, up) == 1.0);
  CHECK(stats::spearman_rho(x, down) == -1.0);

  const std::vector<double> a{1.0, 2.0, 3.0};
  const std::vector<double> b{3.0, 1.0, 2.0};
  CHECK(stats::spearman_rho(a, b) == -0.5);

  const std::vector<double> flat{2.0, 2.0, 2.0, 2.0};
  CHECK_THROWS_AS(stats::spearman_rho(x, flat), DegenerateSample);
  CHECK_THROWS_AS(stats::spearman_rho(a, x), InvalidParameter);
}

TEST_CASE("spearman is invariant under strictly monotone transforms") {
  rng::Engine eng(84);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 3 + eng.bounded(30);
    std::vector<double> x(n), y(n), ex(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = eng.uniform() * 10.0 - 5.0;
      y[i] = eng.uniform() * 10.0 - 5.0;
      ex[i] = std::exp(x[i]);
    }
    const double base = stats::spearman_rho(x, y);
    CHECK(stats::spearman_rho(ex, y) == base);
  }
}

TEST_CASE("entropy in bits") {
  CHECK(stats::entropy_bits(std::vector<double>{1.0}) == 0.0);
  CHECK(stats::entropy_bits(std::vector<double>{0.5, 0.5}) == 1.0);
  CHECK(stats::entropy_bits(std::vector<double>{0.25, 0.75}) ==
        doctest::Approx(0.8112781244591328).epsilon(1e-12));
  CHECK(stats::entropy_bits(std::vector<double>{0.0, 1.0}) == 0.0);
  CHECK_THROWS_AS(stats::entropy_bits(std::vector<double>{0.4, 0.4}),
                  InvalidParameter);
  CHECK_THROWS_AS(stats::entropy_bits(std::vector<double>{1.2, -0.2}),
                  InvalidParameter);
}

TEST_CASE("uniform distribution maximizes entropy") {
  rng::Engine eng(85);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + eng.bounded(9);
    std::vector<double> p(k);
    double sum = 0.0;
    for (auto& v : p) {
      v = eng.uniform() + 1e-12;
      sum += v;
    }
    for (auto& v : p) v /= sum;
    const std::vector<double> uniform(k, 1.0 / static_cast<double>(k));
    CHECK(stats::entropy_bits(p) <= stats::entropy_bits(uniform) + 1e-9);
  }
}

}  // TEST_SUITE
