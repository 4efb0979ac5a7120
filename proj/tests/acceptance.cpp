// Acceptance suite: one pass/fail line per criterion, exit 0 only if all pass.
// Each criterion pins its tolerances and runtime bounds in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "memaudit/corpus.hpp"
#include "memaudit/decomposition.hpp"
#include "memaudit/distribution.hpp"
#include "memaudit/embedding.hpp"
#include "memaudit/metrics.hpp"
#include "memaudit/oracle.hpp"
#include "memaudit/pipeline.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/score.hpp"
#include "memaudit/stats.hpp"
#include "test_util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace memaudit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Harness {
  int failures = 0;
  int selected = 0;  // 0 = all

  void run(int index, const std::string& name,
           const std::function<bool(std::string&)>& body) {
    if (selected != 0 && selected != index) return;
    std::string detail;
    bool ok = false;
    const auto start = Clock::now();
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double dt = seconds_since(start);
    std::printf("[%s] C%d %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", index,
                name.c_str(), dt, detail.empty() ? "" : " - ",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

// ---------------------------------------------------------------------- C1
bool metric_inequalities(std::string& detail) {
  const auto start = Clock::now();
  rng::Engine eng(0xC1);
  std::size_t violations = 0;
  const std::size_t trials = 100000;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto [gen, ref] = testutil::related_pair(eng, 20, 40);
    if (!testutil::chain_holds(testutil::chain_metrics(gen, ref)))
      ++violations;
  }
  const double dt = seconds_since(start);
  std::ostringstream os;
  os << violations << " violations on " << trials << " pairs, " << dt
     << "s single-threaded";
  detail = os.str();
  return violations == 0 && dt < 60.0;
}

// ---------------------------------------------------------------------- C2
bool weighted_ordering(std::string& detail) {
  const auto start = Clock::now();
  const int len = 12;
  const std::uint32_t count = 1u << len;
  std::vector<double> d(count);
  std::vector<int> npre(count);
  for (std::uint32_t v = 0; v < count; ++v) {
    std::vector<std::uint8_t> c(len);
    int first = len;
    for (int j = 0; j < len; ++j) {
      c[static_cast<std::size_t>(j)] = (v >> j) & 1u;
      if (c[static_cast<std::size_t>(j)] && first == len) first = j;
    }
    d[v] = metrics::weighted_distance_from_mismatches(c, 3.0, len);
    npre[v] = first;
  }
  std::size_t order_violations = 0;
  for (std::uint32_t a = 0; a < count; ++a)
    for (std::uint32_t b = 0; b < count; ++b)
      if (npre[a] > npre[b] && !(d[a] < d[b])) ++order_violations;

  std::size_t band_violations = 0;
  for (std::uint32_t v = 1; v < count; ++v) {
    double lo = 1.0;
    for (int j = 0; j <= npre[v]; ++j) lo /= 3.0;
    if (!(d[v] >= lo && d[v] < lo * 3.0 / 2.0)) ++band_violations;
  }
  const double dt = seconds_since(start);
  std::ostringstream os;
  os << order_violations << " ordering / " << band_violations
     << " band violations over 2^12 vectors, " << dt << "s";
  detail = os.str();
  return order_violations == 0 && band_violations == 0 && dt < 10.0;
}

// ---------------------------------------------------------------------- C3
bool sampling_miss(std::string& detail) {
  const double headline = distribution::prob_missing_topk(9723, 1, 455);
  const double expected = (9723.0 - 455.0) / 9723.0;
  if (std::abs(headline - expected) > 1e-12) {
    detail = "headline value off";
    return false;
  }
  rng::Engine eng(0xC3);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 10 + eng.bounded(191);
    const std::size_t k = 1 + eng.bounded(5);
    const std::size_t z = 1 + eng.bounded(m);
    const double exact = distribution::prob_missing_topk(m, k, z);

    const int mc_trials = 100000;
    int missed = 0;
    std::vector<std::uint32_t> pool(m);
    for (int t = 0; t < mc_trials; ++t) {
      std::iota(pool.begin(), pool.end(), 0u);
      bool hit = false;
      for (std::size_t j = 0; j < z && !hit; ++j) {
        const auto pick = j + eng.bounded(m - j);
        std::swap(pool[j], pool[pick]);
        if (pool[j] < k) hit = true;
      }
      if (!hit) ++missed;
    }
    worst = std::max(worst,
                     std::abs(exact - static_cast<double>(missed) / mc_trials));
  }
  std::ostringstream os;
  os << "headline " << headline << ", worst MC gap " << worst;
  detail = os.str();
  return worst <= 0.01;
}

// ---------------------------------------------------------------------- C4
bool geometric_closed_loop(std::string& detail) {
  const auto start = Clock::now();
  const auto draws = oracle::simulate_npre(
      {oracle::SimulateModel::Kind::geometric, 0.8, 0.0, 0.0}, 100000, 400,
      0xC4);
  const double p_hat = decomposition::fit_geometric(draws);
  const auto profile = decomposition::hazard_estimate(draws);
  double worst_hazard = 0.0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < profile.p_hat.size(); ++i) {
    if (profile.at_risk[i] < 1000) continue;
    ++checked;
    worst_hazard = std::max(worst_hazard, std::abs(profile.p_hat[i] - 0.8));
  }
  const double dt = seconds_since(start);
  std::ostringstream os;
  os << "p_hat " << p_hat << ", worst hazard gap " << worst_hazard << " over "
     << checked << " positions, " << dt << "s";
  detail = os.str();
  return p_hat >= 0.795 && p_hat <= 0.805 && worst_hazard <= 0.02 &&
         checked >= 5 && dt < 5.0;
}

// ---------------------------------------------------------------------- C5
bool linear_closed_loop(std::string& detail) {
  const auto draws = oracle::simulate_npre(
      {oracle::SimulateModel::Kind::linear, 0.0, -0.05, 0.9}, 100000, 400,
      0xC5);
  const auto profile = decomposition::hazard_estimate(draws);
  const auto fit = decomposition::fit_linear_hazard(profile, true, 1);

  bool exact_ok = true;
  for (int n = 0; n < 20; ++n) {
    if (decomposition::linear_hazard_pmf(0.0, 0.5, n) !=
        std::pow(0.5, n) * 0.5)
      exact_ok = false;
    if (decomposition::linear_hazard_pmf(0.0, 0.75, n) !=
        std::pow(0.75, n) * 0.25)
      exact_ok = false;
  }
  std::ostringstream os;
  os << "alpha " << fit.alpha << ", p0 " << fit.p0
     << (exact_ok ? ", geometric reduction exact" : ", reduction mismatch");
  detail = os.str();
  return std::abs(fit.alpha - (-0.05)) <= 0.02 &&
         std::abs(fit.p0 - 0.9) <= 0.02 && exact_ok;
}

// ---------------------------------------------------------------------- C6
bool survival_identity(std::string& detail) {
  rng::Engine eng(0xC6);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> values(1 + eng.bounded(1000));
    for (auto& v : values) v = static_cast<int>(eng.bounded(30));
    const auto profile = decomposition::hazard_estimate(values);
    const auto surv = decomposition::survival_from_hazard(profile);
    for (std::size_t n = 0; n < surv.size(); ++n) {
      std::size_t tail = 0;
      for (const int v : values)
        if (v >= static_cast<int>(n)) ++tail;
      const double empirical =
          static_cast<double>(tail) / static_cast<double>(values.size());
      worst = std::max(worst, std::abs(surv[n] - empirical));
    }
  }
  std::ostringstream os;
  os << "worst telescoping gap " << worst;
  detail = os.str();
  return worst <= 1e-12;
}

// ---------------------------------------------------------------------- C7
bool mi_null_and_fixture(std::string& detail) {
  rng::Engine eng(0xC7);
  const std::size_t rows = 100000;
  const int cols = 16;
  decomposition::CorrectnessMatrix m(std::vector<std::string>(rows, "r"), cols);
  std::vector<std::uint8_t> row(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto& b : row) b = eng.coin();
    m.set_row(i, row);
  }
  double worst = 0.0;
  for (const auto& e :
       decomposition::mi_profile(m, decomposition::MiMode::pairwise, 0))
    worst = std::max(worst, e.bits);

  const double fixture_mi = decomposition::mutual_information_binary(
      std::vector<std::uint8_t>{0, 1, 1, 0}, std::vector<std::uint8_t>{1, 0, 1, 0});
  std::ostringstream os;
  os << "max pairwise MI " << worst << " bits on 1e5 x 16 fair bits; fixture MI "
     << fixture_mi;
  detail = os.str();
  return worst < 0.005 && fixture_mi == 0.0;
}

// ---------------------------------------------------------------------- C8
bool theorem_oracles(std::string& detail) {
  const double tol = 1e-12;
  for (int t = 0; t < 1000; ++t) {
    const auto dist = oracle::random_instance(0xC80000 + t, 4, 4);
    const auto gap = oracle::boc_vs_termwise_gap(dist, dist.suffix_len());
    if (gap.boc_full_match < gap.termwise_full_match - tol) {
      detail = "dominance failed on instance " + std::to_string(t);
      return false;
    }
  }
  rng::Engine eng(0xC8);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t k = 2 + eng.bounded(6);
    oracle::TokenDist p, q;
    double sp = 0, sq = 0, maxp = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const std::string tok(1, static_cast<char>('a' + i));
      p[tok] = eng.uniform() + 1e-9;
      q[tok] = eng.uniform() + 1e-9;
      sp += p[tok];
      sq += q[tok];
    }
    for (auto& [tok, v] : p) {
      v /= sp;
      maxp = std::max(maxp, v);
    }
    for (auto& [tok, v] : q) v /= sq;
    if (oracle::expected_match_under_sampling(p, q) > maxp + tol) {
      detail = "sampling bound failed";
      return false;
    }
  }
  const auto fixture = oracle::ToyDistribution::load_file(
      std::string(MEMAUDIT_DATA_DIR) + "/fixtures/replicated_prefix.dist");
  const auto gap = oracle::boc_vs_termwise_gap(fixture, 6);
  if (std::abs(gap.boc_full_match - 2.0 / 7.0) > tol ||
      std::abs(gap.termwise_full_match - 1.0 / 7.0) > tol ||
      !gap.divergence_index || *gap.divergence_index != 1) {
    detail = "fixture values off";
    return false;
  }
  // Constructed agree/disagree instances for the greedy biconditional.
  std::vector<std::pair<std::vector<std::string>, double>> entries;
  for (std::size_t i = 0; i < fixture.seqs.size(); ++i)
    entries.emplace_back(fixture.tokens_of(i),
                         fixture.probs[i] * (i == 1 ? 1.3 : 1.0));
  const auto preserved = oracle::ToyDistribution::from_weighted(entries, 0);
  const auto agree = oracle::greedy_matches_termwise(fixture, preserved, 6);
  const bool all_agree =
      std::all_of(agree.matches.begin(), agree.matches.end(),
                  [](bool b) { return b; }) &&
      std::all_of(agree.argmax_agree.begin(), agree.argmax_agree.end(),
                  [](bool b) { return b; });
  entries[0].second = 10.0;
  const auto flipped = oracle::ToyDistribution::from_weighted(entries, 0);
  const auto disagree = oracle::greedy_matches_termwise(fixture, flipped, 6);
  if (!all_agree || disagree.matches[0] || disagree.argmax_agree[0]) {
    detail = "greedy biconditional failed";
    return false;
  }
  detail = "dominance x1000, sampling bound x10000, fixture (2/7, 1/7, pos 1)";
  return true;
}

// ---------------------------------------------------------------------- C9
bool wilcoxon_checks(std::string& detail) {
  rng::Engine eng(0xC9);
  // Exact enumeration vs library, bit for bit, n <= 10.
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + eng.bounded(9);
    std::vector<double> x(n), y(n);
    bool nonzero = false;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(eng.bounded(6));
      y[i] = static_cast<double>(eng.bounded(6));
      nonzero = nonzero || x[i] != y[i];
    }
    if (!nonzero) continue;

    // Enumeration oracle, independent ranking pass.
    std::vector<double> abs_d;
    std::vector<bool> pos;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - y[i];
      if (d == 0.0) continue;
      abs_d.push_back(std::abs(d));
      pos.push_back(d > 0);
    }
    const std::size_t ne = abs_d.size();
    std::vector<std::size_t> order(ne);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return abs_d[a] < abs_d[b];
    });
    std::vector<double> rank(ne);
    std::size_t i = 0;
    while (i < ne) {
      std::size_t j = i;
      while (j < ne && abs_d[order[j]] == abs_d[order[i]]) ++j;
      for (std::size_t k = i; k < j; ++k)
        rank[order[k]] = static_cast<double>(i + 1 + j) / 2.0;
      i = j;
    }
    double w_plus = 0.0;
    for (std::size_t k = 0; k < ne; ++k)
      if (pos[k]) w_plus += rank[k];
    const auto w2 = static_cast<long long>(std::llround(2.0 * w_plus));
    std::uint64_t le = 0, ge = 0;
    const std::uint64_t total = 1ull << ne;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double w = 0.0;
      for (std::size_t k = 0; k < ne; ++k)
        if (mask & (1ull << k)) w += rank[k];
      const auto s = static_cast<long long>(std::llround(2.0 * w));
      if (s <= w2) ++le;
      if (s >= w2) ++ge;
    }
    const double p_oracle =
        std::min(1.0, 2.0 * std::min(static_cast<double>(le) / total,
                                     static_cast<double>(ge) / total));
    const auto lib = stats::wilcoxon_signed_rank(x, y, stats::WilcoxonMethod::exact);
    if (lib.p_value != p_oracle) {
      detail = "exact path mismatch at trial " + std::to_string(trial);
      return false;
    }
  }
  // Exact vs normal at n = 25.
  double worst_gap = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> x(25), y(25);
    for (std::size_t i = 0; i < 25; ++i) {
      x[i] = eng.uniform();
      y[i] = eng.uniform();
    }
    const auto e = stats::wilcoxon_signed_rank(x, y, stats::WilcoxonMethod::exact);
    const auto a = stats::wilcoxon_signed_rank(x, y, stats::WilcoxonMethod::normal);
    worst_gap = std::max(worst_gap, std::abs(e.p_value - a.p_value));
  }
  if (worst_gap > 0.01) {
    detail = "exact/normal gap " + std::to_string(worst_gap);
    return false;
  }
  // Null uniformity over 1e4 simulated nulls.
  const int trials = 10000;
  std::vector<double> ps;
  ps.reserve(trials);
  std::vector<double> x(50), y(50);
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
    ks = std::max(ks, std::abs(static_cast<double>(i + 1) / trials - ps[i]));
    ks = std::max(ks, std::abs(static_cast<double>(i) / trials - ps[i]));
  }
  std::ostringstream os;
  os << "worst exact/normal gap " << worst_gap << ", null KS " << ks;
  detail = os.str();
  return ks < 0.02;
}

// --------------------------------------------------------------------- C10
bool throughput(std::string& detail) {
  rng::Engine eng(0xC10);
  ingest::Corpus corpus;
  corpus.pairs.reserve(100000);
  // Average length ~50 tokens per side, with realistic partial matches.
  for (std::size_t i = 0; i < 100000; ++i) {
    ingest::SamplePair pair;
    pair.id = "t" + std::to_string(i);
    const auto len = 40 + eng.bounded(21);  // 40..60
    pair.reference_tokens.reserve(len);
    for (std::uint64_t j = 0; j < len; ++j)
      pair.reference_tokens.push_back("w" + std::to_string(eng.bounded(500)));
    const auto keep = eng.bounded(len + 1);
    pair.generated_tokens.assign(
        pair.reference_tokens.begin(),
        pair.reference_tokens.begin() + static_cast<std::ptrdiff_t>(keep));
    while (pair.generated_tokens.size() < len)
      pair.generated_tokens.push_back("g" + std::to_string(eng.bounded(500)));
    pair.has_generated = true;
    corpus.pairs.push_back(std::move(pair));
  }

  metrics::MetricConfig cfg;
  const auto start = Clock::now();
  const auto hot = score::score_corpus(corpus, cfg, 0);
  const double dt = seconds_since(start);

  const auto one = score::score_corpus(corpus, cfg, 1);
  bool identical = one.pairs.size() == hot.pairs.size();
  for (std::size_t i = 0; identical && i < one.pairs.size(); ++i) {
    const auto& a = one.pairs[i].bundle;
    const auto& b = hot.pairs[i].bundle;
    identical = a.n_pre == b.n_pre && a.lcs == b.lcs && a.d_w == b.d_w &&
                a.levenshtein == b.levenshtein && a.n_max == b.n_max &&
                a.rouge_l == b.rouge_l && a.correct_bits == b.correct_bits;
  }
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::ostringstream os;
  os << "1e5 pairs in " << dt << "s on " << threads << " threads, "
     << (identical ? "outputs identical across thread counts"
                   : "THREAD-COUNT MISMATCH");
  detail = os.str();
  return dt < 10.0 && identical &&
         hot.summary.relation_violations == 0;
}

// --------------------------------------------------------------------- C11
bool end_to_end_determinism(std::string& detail) {
  const std::string data = MEMAUDIT_DATA_DIR;
  const auto base = fs::temp_directory_path() / "memaudit_acceptance_c11";
  std::error_code ec;
  fs::remove_all(base, ec);
  fs::create_directories(base / "a");
  fs::create_directories(base / "b");

  const auto original_cwd = fs::current_path();
  auto run_pipeline = [&](const fs::path& where) {
    fs::current_path(where);
    pipeline::AnalysisConfig cfg;
    cfg.seed = 20260808;
    cfg.bootstrap_b = 300;
    cfg.threads = 0;
    cfg.output_dir = "out";
    pipeline::run_score(data + "/synthetic/corpus_epoch10.jsonl", cfg,
                        "m10.jsonl", "jsonl");
    pipeline::run_score(data + "/synthetic/corpus_epoch100.jsonl", cfg,
                        "m100.jsonl", "jsonl");
    pipeline::ReportArgs args;
    args.embeddings_path = data + "/synthetic/embeddings.jsonl";
    return pipeline::run_report({"m10.jsonl", "m100.jsonl"}, cfg, args);
  };
  const auto report_a = run_pipeline(base / "a");
  const auto report_b = run_pipeline(base / "b");
  fs::current_path(original_cwd);

  // Every produced byte must match across the two runs.
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(base / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), base / "a");
    const auto other = base / "b" / rel;
    std::ifstream fa(entry.path(), std::ios::binary);
    std::ifstream fb(other, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str() != sb.str()) {
      detail = "byte mismatch in " + rel.string();
      return false;
    }
    ++compared;
  }
  const auto tally0 =
      report_a.at("runs").at(0).at("relation_violations").get<std::size_t>();
  const auto tally1 =
      report_a.at("runs").at(1).at("relation_violations").get<std::size_t>();
  fs::remove_all(base, ec);
  std::ostringstream os;
  os << compared << " files byte-identical; relation tallies " << tally0
     << ", " << tally1;
  detail = os.str();
  return compared >= 14 && tally0 == 0 && tally1 == 0;
}

}  // namespace

int main(int argc, char** argv) {
  Harness h;
  if (argc > 1) h.selected = std::atoi(argv[1]);

  h.run(1, "metric inequality suite on 1e5 random pairs", metric_inequalities);
  h.run(2, "weighted-distance ordering and band, exhaustive at length 12",
        weighted_ordering);
  h.run(3, "sampling-miss probability vs without-replacement oracle",
        sampling_miss);
  h.run(4, "geometric closed loop at p = 0.8", geometric_closed_loop);
  h.run(5, "linear-hazard closed loop and geometric reduction",
        linear_closed_loop);
  h.run(6, "survival telescoping identity", survival_identity);
  h.run(7, "MI null matrix and independence fixture", mi_null_and_fixture);
  h.run(8, "classifier theorem oracles", theorem_oracles);
  h.run(9, "signed-rank exact path, normal approximation, null uniformity",
        wilcoxon_checks);
  h.run(10, "scoring throughput and thread-count determinism", throughput);
  h.run(11, "end-to-end report determinism with zero relation violations",
        end_to_end_determinism);

  if (h.failures != 0) {
    std::printf("%d criterion(s) failed\n", h.failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
