#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memaudit::embedding {

struct EmbeddingRecord {
  std::string id;
  std::vector<float> input_vec;  // embedding of the prefix
  std::vector<float> full_vec;   // embedding of the full sequence
};

double cosine(std::span<const float> u, std::span<const float> v);
double cosine(std::span<const double> u, std::span<const double> v);

enum class Field { input, full };

// For each record, the mean cosine similarity to every other record over the
// chosen field. Records are processed in sorted-id order so the O(M^2)
// pairwise sums are reproducible. Requires >= 2 records.
std::map<std::string, double> mean_similarity(
    const std::vector<EmbeddingRecord>& records, Field field, int threads);

namespace reference {
std::map<std::string, double> mean_similarity(
    const std::vector<EmbeddingRecord>& records, Field field);
}  // namespace reference

// Sampled estimate for very large corpora: each record's mean is estimated
// from `pairs_per_record` sampled partners. Seed is recorded by the caller.
std::map<std::string, double> mean_similarity_sampled(
    const std::vector<EmbeddingRecord>& records, Field field,
    std::size_t pairs_per_record, std::uint64_t seed);

struct GapRow {
  double s_input = 0.0;
  double s_full = 0.0;
  double gap = 0.0;  // s_full - s_input
};

struct SimilarityOptions {
  int threads = 0;
  std::size_t sample_pairs = 0;  // 0 = exact O(M^2) means
  std::uint64_t seed = 0;        // recorded by callers when sampling
};

std::map<std::string, GapRow> similarity_gap(
    const std::vector<EmbeddingRecord>& records, int threads);
std::map<std::string, GapRow> similarity_gap(
    const std::vector<EmbeddingRecord>& records, const SimilarityOptions& opts);

struct SimilarityReportRow {
  std::string id;
  double s_input = 0.0;
  double s_full = 0.0;
  double gap = 0.0;
  int n_pre = 0;
};

struct SimilarityReport {
  std::vector<SimilarityReportRow> rows;  // sorted by id
  std::optional<double> rho_input;        // Spearman vs n_pre
  std::optional<double> rho_full;
  std::optional<double> rho_gap;
  std::vector<std::string> unmatched_ids;  // present on one side only
};

SimilarityReport memorization_similarity_report(
    const std::vector<EmbeddingRecord>& records,
    const std::map<std::string, int>& npre_by_id, int threads);
SimilarityReport memorization_similarity_report(
    const std::vector<EmbeddingRecord>& records,
    const std::map<std::string, int>& npre_by_id,
    const SimilarityOptions& opts);

std::vector<EmbeddingRecord> load_embeddings_jsonl(const std::string& path);

// Packed binary layout: magic "EMB1", u32 dim, u32 count, then per record
// u32 id length, id bytes, dim input floats, dim full floats. All integers
// and floats little-endian.
std::vector<EmbeddingRecord> load_embeddings_binary(const std::string& path);
void write_embeddings_binary(const std::string& path,
                             const std::vector<EmbeddingRecord>& records);

}  // namespace memaudit::embedding
