#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "memaudit/corpus.hpp"
#include "memaudit/decomposition.hpp"
#include "memaudit/metrics.hpp"
#include "memaudit/oracle.hpp"
#include "memaudit/score.hpp"

namespace memaudit::pipeline {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "memaudit";
inline constexpr const char* kToolVersion = "0.1.0";

struct AnalysisConfig {
  int cut = 100;
  std::string format = "jsonl";
  bool snap_word_boundary = false;
  std::vector<int> rouge_ns{1, 2};
  double d_w_base = 3.0;
  int d_w_truncation = 0;  // 0 = max(N1, N2) per pair
  int max_pos = 128;
  std::uint64_t seed = 0;
  std::uint32_t bootstrap_b = 0;
  double level = 0.95;
  std::string output_dir = ".";
  int threads = 0;
  std::size_t min_at_risk = 1;
  std::string mi_mode = "pairwise";

  json to_json() const;
  metrics::MetricConfig metric_config() const;
};

// Flat key = value text, '#' comments. Unknown keys are an error.
AnalysisConfig load_config_file(const std::string& path);

// Shortest round-trip decimal form, identical on every run.
std::string fmt_double(double v);

std::string file_digest_hex(const std::string& path);  // fnv1a64 over bytes

// ---------------------------------------------------------------------------
// Metric files: one record per corpus line, optional trailing summary object.

struct MetricRecord {
  std::string id;
  std::vector<std::string> flags;
  metrics::MetricBundle bundle;
  bool scored() const { return flags.empty(); }
};

struct MetricFile {
  std::vector<MetricRecord> records;
  json summary;  // empty when the file has no footer
};

void write_metric_jsonl(const std::string& path, const score::ScoreResult& res,
                        const ingest::Corpus& corpus,
                        const AnalysisConfig& cfg);
void write_metric_csv(const std::string& path, const score::ScoreResult& res,
                      const AnalysisConfig& cfg);
MetricFile load_metric_jsonl(const std::string& path);

std::vector<int> npre_values(const MetricFile& mf);
std::map<std::string, int> npre_by_id(const MetricFile& mf);
decomposition::CorrectnessMatrix matrix_from_metrics(const MetricFile& mf,
                                                     int max_pos);

// ---------------------------------------------------------------------------
// Subcommand drivers shared by the CLI and the test suites.

void run_split(const std::string& corpus_path, const AnalysisConfig& cfg,
               const std::string& out_path);

score::ScoreSummary run_score(const std::string& corpus_path,
                              const AnalysisConfig& cfg,
                              const std::string& out_path,
                              const std::string& out_format,
                              const std::string& manifest_path = "");

struct DistributionArgs {
  std::vector<int> ks{10};
  std::vector<double> qs{0.5, 0.9, 0.99};
  std::string statistic = "max";
};

json run_distribution(const std::string& metrics_path,
                      const AnalysisConfig& cfg, const DistributionArgs& args);

json run_decompose(const std::string& metrics_path,
                   const std::string& corpus_path, const AnalysisConfig& cfg);

// sample_pairs > 0 switches the O(M^2) means to the seeded sampled estimate.
json run_embed(const std::string& embeddings_path,
               const std::string& metrics_path, const AnalysisConfig& cfg,
               std::size_t sample_pairs = 0);

json run_compare(const std::string& metrics_a, const std::string& metrics_b,
                 const AnalysisConfig& cfg);

void run_simulate(const oracle::SimulateModel& model, std::size_t count,
                  int max_len, const AnalysisConfig& cfg,
                  const std::string& out_path);

// Prints one line per check; returns false if any check fails.
bool run_verify(std::ostream& out, std::size_t instances, std::uint64_t seed,
                const std::string& extra_dist_path = "");

struct ReportArgs {
  std::vector<int> ks{10};
  std::vector<double> qs{0.5, 0.9, 0.99};
  std::string embeddings_path;  // optional
};

json run_report(const std::vector<std::string>& metric_paths,
                const AnalysisConfig& cfg, const ReportArgs& args);

}  // namespace memaudit::pipeline
