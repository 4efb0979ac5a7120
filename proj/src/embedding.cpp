#include "memaudit/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"
#include "memaudit/error.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/stats.hpp"

static_assert(std::endian::native == std::endian::little,
              "packed embedding i/o assumes a little-endian host");

namespace memaudit::embedding {

using nlohmann::json;

namespace {

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

// Records sorted by id and normalized once; similarity then reduces to dots.
struct Normalized {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vecs;
};

Normalized normalize(const std::vector<EmbeddingRecord>& records, Field field) {
  std::vector<const EmbeddingRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });

  Normalized out;
  std::size_t dim = 0;
  for (const auto* r : sorted) {
    const auto& v = field == Field::input ? r->input_vec : r->full_vec;
    if (v.empty()) throw DataError("record " + r->id + " is missing a vector");
    if (dim == 0) dim = v.size();
    if (v.size() != dim)
      throw DataError("dimension mismatch at record " + r->id);
    double norm2 = 0.0;
    std::vector<double> d(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      d[i] = v[i];
      norm2 += d[i] * d[i];
    }
    if (norm2 == 0.0) throw DataError("zero-norm vector at record " + r->id);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : d) x *= inv;
    out.ids.push_back(r->id);
    out.vecs.push_back(std::move(d));
  }
  return out;
}

std::map<std::string, double> mean_similarity_impl(const Normalized& n,
                                                   int threads) {
  const auto m = n.vecs.size();
  std::vector<double> means(m, 0.0);
  const auto mi = static_cast<std::int64_t>(m);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) \
    num_threads(threads > 0 ? threads : omp_get_max_threads())
#endif
  for (std::int64_t i = 0; i < mi; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (static_cast<std::size_t>(i) == j) continue;
      sum += dot(n.vecs[static_cast<std::size_t>(i)], n.vecs[j]);
    }
    means[static_cast<std::size_t>(i)] = sum / static_cast<double>(m - 1);
  }
  (void)threads;
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < m; ++i) out.emplace(n.ids[i], means[i]);
  return out;
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw InvalidParameter("cosine requires equal dimensions");
  if (u.empty()) throw InvalidParameter("cosine of empty vectors");
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    vv += v[i] * v[i];
    uv += u[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0)
    throw InvalidParameter("cosine undefined for zero-norm vectors");
  return uv / (std::sqrt(uu) * std::sqrt(vv));
}

double cosine(std::span<const float> u, std::span<const float> v) {
  std::vector<double> du(u.begin(), u.end()), dv(v.begin(), v.end());
  return cosine(std::span<const double>(du), std::span<const double>(dv));
}

std::map<std::string, double> mean_similarity(
    const std::vector<EmbeddingRecord>& records, Field field, int threads) {
  if (records.size() < 2)
    throw InsufficientData("mean similarity needs >= 2 records");
  return mean_similarity_impl(normalize(records, field), threads);
}

namespace reference {

std::map<std::string, double> mean_similarity(
    const std::vector<EmbeddingRecord>& records, Field field) {
  if (records.size() < 2)
    throw InsufficientData("mean similarity needs >= 2 records");
  std::map<std::string, double> out;
  for (const auto& a : records) {
    double sum = 0.0;
    for (const auto& b : records) {
      if (b.id == a.id) continue;
      sum += cosine(
          std::span<const float>(field == Field::input ? a.input_vec
                                                       : a.full_vec),
          std::span<const float>(field == Field::input ? b.input_vec
                                                       : b.full_vec));
    }
    out.emplace(a.id, sum / static_cast<double>(records.size() - 1));
  }
  return out;
}

}  // namespace reference

std::map<std::string, double> mean_similarity_sampled(
    const std::vector<EmbeddingRecord>& records, Field field,
    std::size_t pairs_per_record, std::uint64_t seed) {
  if (records.size() < 2)
    throw InsufficientData("mean similarity needs >= 2 records");
  if (pairs_per_record < 1)
    throw InvalidParameter("sampled similarity needs >= 1 pair per record");
  const auto n = normalize(records, field);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < n.vecs.size(); ++i) {
    auto eng = rng::replicate_engine(seed, i);
    double sum = 0.0;
    for (std::size_t t = 0; t < pairs_per_record; ++t) {
      std::size_t j = eng.bounded(n.vecs.size() - 1);
      if (j >= i) ++j;  // exclude self
      sum += dot(n.vecs[i], n.vecs[j]);
    }
    out.emplace(n.ids[i], sum / static_cast<double>(pairs_per_record));
  }
  return out;
}

std::map<std::string, GapRow> similarity_gap(
    const std::vector<EmbeddingRecord>& records,
    const SimilarityOptions& opts) {
  const auto means = [&](Field field) {
    return opts.sample_pairs > 0
               ? mean_similarity_sampled(records, field, opts.sample_pairs,
                                         opts.seed)
               : mean_similarity(records, field, opts.threads);
  };
  const auto s_in = means(Field::input);
  const auto s_full = means(Field::full);
  std::map<std::string, GapRow> out;
  for (const auto& [id, si] : s_in) {
    GapRow row;
    row.s_input = si;
    row.s_full = s_full.at(id);
    row.gap = row.s_full - row.s_input;
    out.emplace(id, row);
  }
  return out;
}

std::map<std::string, GapRow> similarity_gap(
    const std::vector<EmbeddingRecord>& records, int threads) {
  SimilarityOptions opts;
  opts.threads = threads;
  return similarity_gap(records, opts);
}

SimilarityReport memorization_similarity_report(
    const std::vector<EmbeddingRecord>& records,
    const std::map<std::string, int>& npre_by_id,
    const SimilarityOptions& opts) {
  const auto gaps = similarity_gap(records, opts);
  SimilarityReport report;
  std::vector<double> xs_in, xs_full, xs_gap, ys;
  for (const auto& [id, row] : gaps) {
    auto it = npre_by_id.find(id);
    if (it == npre_by_id.end()) {
      report.unmatched_ids.push_back(id);
      continue;
    }
    report.rows.push_back({id, row.s_input, row.s_full, row.gap, it->second});
    xs_in.push_back(row.s_input);
    xs_full.push_back(row.s_full);
    xs_gap.push_back(row.gap);
    ys.push_back(it->second);
  }
  for (const auto& [id, _] : npre_by_id)
    if (!gaps.contains(id)) report.unmatched_ids.push_back(id);
  std::sort(report.unmatched_ids.begin(), report.unmatched_ids.end());

  auto rho_or_flag = [&](const std::vector<double>& xs) -> std::optional<double> {
    if (ys.size() < 2) return std::nullopt;
    try {
      return stats::spearman_rho(xs, ys);
    } catch (const std::exception&) {
      return std::nullopt;  // constant ranks
    }
  };
  report.rho_input = rho_or_flag(xs_in);
  report.rho_full = rho_or_flag(xs_full);
  report.rho_gap = rho_or_flag(xs_gap);
  return report;
}

SimilarityReport memorization_similarity_report(
    const std::vector<EmbeddingRecord>& records,
    const std::map<std::string, int>& npre_by_id, int threads) {
  SimilarityOptions opts;
  opts.threads = threads;
  return memorization_similarity_report(records, npre_by_id, opts);
}

std::vector<EmbeddingRecord> load_embeddings_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file: " + path);
  std::vector<EmbeddingRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
        !j.contains("input_vec") || !j.contains("full_vec"))
      throw DataError("malformed embedding record at line " +
                      std::to_string(lineno));
    EmbeddingRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.input_vec = j.at("input_vec").get<std::vector<float>>();
    rec.full_vec = j.at("full_vec").get<std::vector<float>>();
    records.push_back(std::move(rec));
  }
  return records;
}

namespace {
constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
}

std::vector<EmbeddingRecord> load_embeddings_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file: " + path);
  char magic[4];
  std::uint32_t dim = 0, count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&dim), 4);
  in.read(reinterpret_cast<char*>(&count), 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("bad embedding file header: " + path);
  std::vector<EmbeddingRecord> records;
  records.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    std::uint32_t id_len = 0;
    in.read(reinterpret_cast<char*>(&id_len), 4);
    EmbeddingRecord rec;
    rec.id.resize(id_len);
    in.read(rec.id.data(), id_len);
    rec.input_vec.resize(dim);
    rec.full_vec.resize(dim);
    in.read(reinterpret_cast<char*>(rec.input_vec.data()),
            static_cast<std::streamsize>(dim * sizeof(float)));
    in.read(reinterpret_cast<char*>(rec.full_vec.data()),
            static_cast<std::streamsize>(dim * sizeof(float)));
    if (!in) throw DataError("truncated embedding file: " + path);
    records.push_back(std::move(rec));
  }
  return records;
}

void write_embeddings_binary(const std::string& path,
                             const std::vector<EmbeddingRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write embedding file: " + path);
  const std::uint32_t dim =
      records.empty() ? 0 : static_cast<std::uint32_t>(records[0].input_vec.size());
  const auto count = static_cast<std::uint32_t>(records.size());
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& rec : records) {
    if (rec.input_vec.size() != dim || rec.full_vec.size() != dim)
      throw DataError("dimension mismatch while writing " + rec.id);
    const auto id_len = static_cast<std::uint32_t>(rec.id.size());
    out.write(reinterpret_cast<const char*>(&id_len), 4);
    out.write(rec.id.data(), id_len);
    out.write(reinterpret_cast<const char*>(rec.input_vec.data()),
              static_cast<std::streamsize>(dim * sizeof(float)));
    out.write(reinterpret_cast<const char*>(rec.full_vec.data()),
              static_cast<std::streamsize>(dim * sizeof(float)));
  }
}

}  // namespace memaudit::embedding
