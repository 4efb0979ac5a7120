#include "memaudit/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "memaudit/distribution.hpp"
#include "memaudit/embedding.hpp"
#include "memaudit/error.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/stats.hpp"
#include "memaudit/text.hpp"

namespace memaudit::pipeline {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string file_digest_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for digest: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    const auto n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

json AnalysisConfig::to_json() const {
  json j;
  j["cut"] = cut;
  j["format"] = format;
  j["snap_word_boundary"] = snap_word_boundary;
  j["rouge_n"] = rouge_ns;
  j["d_w_base"] = d_w_base;
  j["d_w_truncation"] = d_w_truncation;
  j["max_pos"] = max_pos;
  j["seed"] = seed;
  j["bootstrap_b"] = bootstrap_b;
  j["level"] = level;
  j["output_dir"] = output_dir;
  j["threads"] = threads;
  j["min_at_risk"] = min_at_risk;
  j["mi_mode"] = mi_mode;
  return j;
}

metrics::MetricConfig AnalysisConfig::metric_config() const {
  metrics::MetricConfig mc;
  mc.rouge_ns = rouge_ns;
  mc.d_w_base = d_w_base;
  mc.d_w_truncation = d_w_truncation;
  mc.max_pos = max_pos;
  return mc;
}

namespace {

std::vector<int> parse_int_list(const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

}  // namespace

AnalysisConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  AnalysisConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw DataError("config line " + std::to_string(lineno) +
                        ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "cut") {
        cfg.cut = std::stoi(value);
      } else if (key == "format") {
        cfg.format = value;
      } else if (key == "snap_word_boundary") {
        cfg.snap_word_boundary = value == "true" || value == "1";
      } else if (key == "rouge_n") {
        cfg.rouge_ns = parse_int_list(value);
      } else if (key == "d_w_base") {
        cfg.d_w_base = std::stod(value);
      } else if (key == "d_w_truncation") {
        cfg.d_w_truncation = std::stoi(value);
      } else if (key == "max_pos") {
        cfg.max_pos = std::stoi(value);
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else if (key == "bootstrap_b") {
        cfg.bootstrap_b = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "level") {
        cfg.level = std::stod(value);
      } else if (key == "output_dir") {
        cfg.output_dir = value;
      } else if (key == "threads") {
        cfg.threads = std::stoi(value);
      } else if (key == "min_at_risk") {
        cfg.min_at_risk = std::stoull(value);
      } else if (key == "mi_mode") {
        cfg.mi_mode = value;
      } else {
        throw DataError("config line " + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
      }
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError("config line " + std::to_string(lineno) +
                      ": bad value for '" + key + "'");
    }
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Metric file serialization.

namespace {

std::string bits_to_string(const std::vector<std::uint8_t>& bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) s[i] = '1';
  return s;
}

std::vector<std::uint8_t> bits_from_string(const std::string& s) {
  std::vector<std::uint8_t> bits(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) bits[i] = s[i] == '1' ? 1 : 0;
  return bits;
}

std::vector<std::string> pair_flags(const score::PairScore& ps) {
  std::vector<std::string> flags;
  if (ps.flagged_empty_suffix) flags.push_back("empty_suffix");
  if (ps.flagged_no_generated) flags.push_back("no_generated");
  return flags;
}

json record_json(const score::PairScore& ps) {
  json j;
  j["id"] = ps.id;
  const auto flags = pair_flags(ps);
  if (!flags.empty()) {
    j["flags"] = flags;
    return j;
  }
  const auto& b = ps.bundle;
  j["n_pre"] = b.n_pre;
  j["lcs"] = b.lcs;
  j["levenshtein"] = b.levenshtein;
  j["n_max"] = b.n_max;
  j["inplace_run"] = b.inplace_run;
  j["d1"] = b.d1;
  j["d_w"] = b.d_w;
  if (b.rouge_l)
    j["rouge_l"] = *b.rouge_l;
  else
    j["rouge_l"] = nullptr;
  for (const auto& rn : b.rouge_n) {
    const std::string base = "rouge_" + std::to_string(rn.n);
    j[base + "_precision"] = rn.precision ? json(*rn.precision) : json(nullptr);
    j[base + "_recall"] = rn.recall ? json(*rn.recall) : json(nullptr);
  }
  j["n1"] = b.n1;
  j["n2"] = b.n2;
  j["correct_bits"] = bits_to_string(b.correct_bits);
  j["flags"] = json::array();
  return j;
}

json summary_footer(const score::ScoreResult& res, const ingest::Corpus& corpus,
                    const AnalysisConfig& cfg) {
  json j;
  j["type"] = "summary";
  j["records"] = res.summary.records;
  j["scored"] = res.summary.scored;
  j["flagged_empty_suffix"] = res.summary.flagged_empty_suffix;
  j["flagged_no_generated"] = res.summary.flagged_no_generated;
  j["parse_errors"] = res.summary.parse_errors;
  j["relation_violations"] = res.summary.relation_violations;
  j["prefix_link_violations"] = res.summary.prefix_link_violations;
  j["bit_convention"] = decomposition::kBitConvention;
  json errors = json::array();
  std::size_t listed = 0;
  for (const auto& e : corpus.errors) {
    if (listed++ == 100) break;
    errors.push_back({{"line", e.line}, {"message", e.message}});
  }
  j["errors"] = errors;
  if (corpus.empty_input) j["warnings"] = json::array({"empty corpus"});
  json run;
  run["run_id"] = corpus.run.run_id;
  run["checkpoint"] = corpus.run.checkpoint_label;
  run["epoch"] = corpus.run.epoch ? json(*corpus.run.epoch) : json(nullptr);
  run["loss"] = corpus.run.mean_loss ? json(*corpus.run.mean_loss) : json(nullptr);
  j["run"] = run;
  j["config"] = cfg.to_json();
  return j;
}

}  // namespace

void write_metric_jsonl(const std::string& path, const score::ScoreResult& res,
                        const ingest::Corpus& corpus,
                        const AnalysisConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write metric file: " + path);
  for (const auto& ps : res.pairs) out << record_json(ps).dump() << "\n";
  out << summary_footer(res, corpus, cfg).dump() << "\n";
}

void write_metric_csv(const std::string& path, const score::ScoreResult& res,
                      const AnalysisConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write metric file: " + path);
  out << "id,n_pre,lcs,levenshtein,n_max,inplace_run,d1,d_w,rouge_l";
  for (const int n : cfg.rouge_ns)
    out << ",rouge_" << n << "_precision,rouge_" << n << "_recall";
  out << ",n1,n2,correct_bits,flags\n";
  for (const auto& ps : res.pairs) {
    out << ps.id;
    const auto flags = pair_flags(ps);
    if (!flags.empty()) {
      for (int i = 0; i < 8 + 2 * static_cast<int>(cfg.rouge_ns.size()) + 2; ++i)
        out << ',';
      out << ',';
      for (std::size_t i = 0; i < flags.size(); ++i)
        out << (i ? ";" : "") << flags[i];
      out << "\n";
      continue;
    }
    const auto& b = ps.bundle;
    out << ',' << b.n_pre << ',' << b.lcs << ',' << b.levenshtein << ','
        << b.n_max << ',' << b.inplace_run << ',' << b.d1 << ','
        << fmt_double(b.d_w) << ',';
    if (b.rouge_l) out << fmt_double(*b.rouge_l);
    for (const auto& rn : b.rouge_n) {
      out << ',';
      if (rn.precision) out << fmt_double(*rn.precision);
      out << ',';
      if (rn.recall) out << fmt_double(*rn.recall);
    }
    out << ',' << b.n1 << ',' << b.n2 << ',' << bits_to_string(b.correct_bits)
        << ",\n";
  }
}

MetricFile load_metric_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open metric file: " + path);
  MetricFile mf;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object())
      throw DataError(path + ": malformed record at line " +
                      std::to_string(lineno));
    if (j.contains("type") && j.at("type") == "summary") {
      mf.summary = j;
      continue;
    }
    MetricRecord rec;
    rec.id = j.at("id").get<std::string>();
    if (j.contains("flags"))
      rec.flags = j.at("flags").get<std::vector<std::string>>();
    if (rec.scored()) {
      if (!j.contains("n_pre"))
        throw DataError(path + ": record without n_pre at line " +
                        std::to_string(lineno));
      rec.bundle.n_pre = j.at("n_pre").get<int>();
      rec.bundle.lcs = j.value("lcs", 0);
      rec.bundle.levenshtein = j.value("levenshtein", 0);
      rec.bundle.n_max = j.value("n_max", 0);
      rec.bundle.inplace_run = j.value("inplace_run", 0);
      rec.bundle.d1 = j.value("d1", 0);
      rec.bundle.d_w = j.value("d_w", 0.0);
      rec.bundle.n1 = j.value("n1", 0);
      rec.bundle.n2 = j.value("n2", 0);
      if (j.contains("correct_bits"))
        rec.bundle.correct_bits =
            bits_from_string(j.at("correct_bits").get<std::string>());
    }
    mf.records.push_back(std::move(rec));
  }
  return mf;
}

std::vector<int> npre_values(const MetricFile& mf) {
  std::vector<int> values;
  for (const auto& rec : mf.records)
    if (rec.scored()) values.push_back(rec.bundle.n_pre);
  return values;
}

std::map<std::string, int> npre_by_id(const MetricFile& mf) {
  std::map<std::string, int> out;
  for (const auto& rec : mf.records)
    if (rec.scored()) out.emplace(rec.id, rec.bundle.n_pre);
  return out;
}

decomposition::CorrectnessMatrix matrix_from_metrics(const MetricFile& mf,
                                                     int max_pos) {
  std::vector<std::string> ids;
  for (const auto& rec : mf.records)
    if (rec.scored()) ids.push_back(rec.id);
  decomposition::CorrectnessMatrix m(std::move(ids), max_pos);
  std::size_t row = 0;
  for (const auto& rec : mf.records)
    if (rec.scored()) m.set_row(row++, rec.bundle.correct_bits);
  return m;
}

// ---------------------------------------------------------------------------
// Drivers.

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
}

std::string out_path(const AnalysisConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  return (fs::path(cfg.output_dir) / name).string();
}

json input_stamp(const std::string& path) {
  json j;
  j["file"] = fs::path(path).filename().string();
  j["digest"] = file_digest_hex(path);
  return j;
}

json summary_json(const distribution::DistributionSummary& s) {
  json j;
  j["m"] = s.m;
  j["mean"] = s.mean;
  j["max"] = s.max;
  j["skewness"] = s.skewness ? json(*s.skewness) : json(nullptr);
  j["excess_kurtosis"] =
      s.excess_kurtosis ? json(*s.excess_kurtosis) : json(nullptr);
  j["jarque_bera"] = s.jarque_bera ? json(*s.jarque_bera) : json(nullptr);
  json quantiles = json::array();
  for (const auto& [q, v] : s.quantiles)
    quantiles.push_back({{"q", q}, {"value", v}});
  j["quantiles"] = quantiles;
  j["topk_curve"] = s.topk_curve;
  json ecdf = json::array();
  for (const auto& e : s.ecdf)
    ecdf.push_back({{"n", e.value}, {"count", e.count}, {"F", e.cumulative}});
  j["ecdf"] = ecdf;
  return j;
}

std::string ecdf_csv(const distribution::DistributionSummary& s) {
  std::string csv = "n,F(n),count\n";
  for (const auto& e : s.ecdf) {
    csv += std::to_string(e.value);
    csv += ',';
    csv += fmt_double(e.cumulative);
    csv += ',';
    csv += std::to_string(e.count);
    csv += '\n';
  }
  return csv;
}

json hazard_json(const decomposition::HazardProfile& profile,
                 const AnalysisConfig& cfg) {
  json j;
  json positions = json::array();
  for (std::size_t i = 0; i < profile.p_hat.size(); ++i)
    positions.push_back({{"j", i + 1},
                         {"p_hat", profile.p_hat[i]},
                         {"at_risk", profile.at_risk[i]}});
  j["positions"] = positions;
  j["geometric_p"] =
      profile.geometric_p ? json(*profile.geometric_p) : json(nullptr);
  if (profile.linear_alpha) {
    j["linear_alpha"] = *profile.linear_alpha;
    j["linear_p0"] = *profile.linear_p0;
  } else {
    j["linear_alpha"] = nullptr;
    j["linear_p0"] = nullptr;
    j["linear_fit_flag"] = "insufficient_data";
  }
  j["min_at_risk"] = cfg.min_at_risk;
  return j;
}

std::string hazard_csv(const decomposition::HazardProfile& profile) {
  std::string csv = "j,p_hat,at_risk\n";
  for (std::size_t i = 0; i < profile.p_hat.size(); ++i) {
    csv += std::to_string(i + 1);
    csv += ',';
    csv += fmt_double(profile.p_hat[i]);
    csv += ',';
    csv += std::to_string(profile.at_risk[i]);
    csv += '\n';
  }
  return csv;
}

decomposition::HazardProfile fitted_hazard(const std::vector<int>& values,
                                           const AnalysisConfig& cfg) {
  auto profile = decomposition::hazard_estimate(values);
  profile.geometric_p = decomposition::fit_geometric(values);
  try {
    const auto fit = decomposition::fit_linear_hazard(profile, /*weighted=*/true,
                                                      cfg.min_at_risk);
    profile.linear_alpha = fit.alpha;
    profile.linear_p0 = fit.p0;
  } catch (const InsufficientData&) {
    // left unset; serialized as a flag
  }
  return profile;
}

std::string mi_csv(const std::vector<decomposition::MiEntry>& entries,
                   const std::string& mode) {
  std::string csv = "# bit_convention=";
  csv += decomposition::kBitConvention;
  csv += " mode=";
  csv += mode;
  csv += "\nsource,target,bits,rows\n";
  for (const auto& e : entries) {
    csv += std::to_string(e.source);
    csv += ',';
    csv += std::to_string(e.target);
    csv += ',';
    csv += fmt_double(e.bits);
    csv += ',';
    csv += std::to_string(e.rows);
    csv += '\n';
  }
  return csv;
}

std::vector<decomposition::MiEntry> run_mi(const MetricFile& mf,
                                           const AnalysisConfig& cfg) {
  int effective = 0;
  for (const auto& rec : mf.records)
    if (rec.scored())
      effective = std::max(
          effective, static_cast<int>(rec.bundle.correct_bits.size()));
  effective = std::min(effective, cfg.max_pos);
  if (effective < 2) return {};
  const auto matrix = matrix_from_metrics(mf, effective);
  return decomposition::mi_profile(
      matrix, decomposition::parse_mi_mode(cfg.mi_mode), cfg.threads);
}

json wilcoxon_json(const stats::WilcoxonResult& w) {
  json j;
  j["w_plus"] = w.w_plus;
  j["w_minus"] = w.w_minus;
  j["w"] = w.w;
  j["p_value"] = w.p_value;
  j["n_effective"] = w.n_effective;
  j["zeros_dropped"] = w.zeros_dropped;
  j["method"] = w.method == stats::WilcoxonMethod::exact ? "exact" : "normal";
  return j;
}

json compare_runs(const MetricFile& a, const MetricFile& b) {
  const auto na = npre_by_id(a);
  const auto nb = npre_by_id(b);
  std::vector<double> x, y;
  std::vector<std::string> only_a, only_b;
  for (const auto& [id, v] : na) {
    const auto it = nb.find(id);
    if (it == nb.end()) {
      only_a.push_back(id);
      continue;
    }
    x.push_back(v);
    y.push_back(it->second);
  }
  for (const auto& [id, v] : nb)
    if (!na.contains(id)) only_b.push_back(id);

  json j;
  json join;
  join["joined"] = x.size();
  join["only_in_a"] = only_a.size();
  join["only_in_b"] = only_b.size();
  only_a.resize(std::min<std::size_t>(only_a.size(), 20));
  only_b.resize(std::min<std::size_t>(only_b.size(), 20));
  join["only_in_a_sample"] = only_a;
  join["only_in_b_sample"] = only_b;
  j["join"] = join;
  if (x.empty()) {
    j["wilcoxon"] = nullptr;
    j["flag"] = "no_shared_ids";
    return j;
  }
  try {
    j["wilcoxon"] = wilcoxon_json(stats::wilcoxon_signed_rank(x, y));
  } catch (const DegenerateSample&) {
    j["wilcoxon"] = nullptr;
    j["flag"] = "degenerate";
  }
  return j;
}

std::string missing_prob_csv(const std::vector<int>& values,
                             const std::vector<int>& ks) {
  const auto ecdf = distribution::Ecdf::from_values(values);
  const int max_v = ecdf.support().back();
  const std::size_t m = values.size();
  std::vector<int> kcols;
  for (const int k : ks)
    if (k >= 1 && static_cast<std::size_t>(k) <= m) kcols.push_back(k);
  std::string csv = "z";
  for (const int k : kcols) csv += ",prob_missing_top" + std::to_string(k);
  csv += ",prob_sampled_max_below_true_max\n";
  const std::size_t step = std::max<std::size_t>(1, m / 100);
  for (std::size_t z = 1; z <= m; z += (z == m ? 1 : std::min(step, m - z))) {
    csv += std::to_string(z);
    for (const int k : kcols) {
      csv += ',';
      csv += fmt_double(distribution::prob_missing_topk(m, k, z));
    }
    csv += ',';
    csv += fmt_double(distribution::prob_max_below(ecdf, z, max_v));
    csv += '\n';
    if (z == m) break;
  }
  return csv;
}

}  // namespace

void run_split(const std::string& corpus_path, const AnalysisConfig& cfg,
               const std::string& out_path_str) {
  const auto raw =
      ingest::load_raw(corpus_path, ingest::parse_format(cfg.format));
  const ingest::SplitConfig split_cfg{static_cast<std::size_t>(cfg.cut),
                                      cfg.snap_word_boundary};
  std::ofstream out(out_path_str, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write split file: " + out_path_str);
  for (const auto& rec : raw.records) {
    const auto split = cfg.snap_word_boundary
                           ? text::split_prefix_snap(rec.reference, split_cfg.cut)
                           : text::split_prefix(rec.reference, split_cfg.cut);
    json j;
    j["id"] = rec.id;
    j["prefix"] = split.prefix;
    j["suffix"] = split.suffix;
    if (rec.generated) j["generated"] = *rec.generated;
    j["prefix_tokens"] = text::tokenize_words(split.prefix);
    j["suffix_tokens"] = text::tokenize_words(split.suffix);
    json flags = json::array();
    if (split.suffix.empty()) flags.push_back("empty_suffix");
    j["flags"] = flags;
    out << j.dump() << "\n";
  }
  json footer;
  footer["type"] = "summary";
  footer["records"] = raw.records.size();
  footer["parse_errors"] = raw.errors.size();
  footer["config"] = cfg.to_json();
  out << footer.dump() << "\n";
}

score::ScoreSummary run_score(const std::string& corpus_path,
                              const AnalysisConfig& cfg,
                              const std::string& out_path_str,
                              const std::string& out_format,
                              const std::string& manifest_path) {
  auto corpus = ingest::load_corpus(
      corpus_path, ingest::parse_format(cfg.format),
      {static_cast<std::size_t>(cfg.cut), cfg.snap_word_boundary});
  if (!manifest_path.empty()) corpus.run = ingest::load_manifest(manifest_path);
  const auto result = score::score_corpus(corpus, cfg.metric_config(), cfg.threads);
  if (out_format == "jsonl") {
    write_metric_jsonl(out_path_str, result, corpus, cfg);
  } else if (out_format == "csv") {
    write_metric_csv(out_path_str, result, cfg);
  } else {
    throw InvalidParameter("unknown metric output format: " + out_format);
  }
  return result.summary;
}

json run_distribution(const std::string& metrics_path,
                      const AnalysisConfig& cfg, const DistributionArgs& args) {
  const auto mf = load_metric_jsonl(metrics_path);
  const auto values = npre_values(mf);
  if (values.empty()) throw DataError("no scored records in " + metrics_path);
  const auto summary = distribution::summarize(values, args.ks, args.qs);

  json doc;
  doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  doc["config"] = cfg.to_json();
  doc["input"] = input_stamp(metrics_path);
  if (!mf.summary.is_null() && mf.summary.contains("run"))
    doc["run"] = mf.summary.at("run");
  doc["summary"] = summary_json(summary);
  if (cfg.bootstrap_b >= 1) {
    const auto stat = distribution::parse_statistic(args.statistic);
    const auto boot = distribution::bootstrap(values, stat, cfg.bootstrap_b,
                                              cfg.seed, cfg.level, cfg.threads);
    json b;
    b["statistic"] = boot.statistic;
    b["point"] = boot.point;
    b["lo"] = boot.lo;
    b["hi"] = boot.hi;
    b["level"] = boot.level;
    b["replicates"] = boot.replicates;
    b["seed"] = boot.seed;
    b["rng"] = boot.rng;
    doc["bootstrap"] = b;
  }
  write_text(out_path(cfg, "distribution_summary.json"), doc.dump(2) + "\n");
  write_text(out_path(cfg, "ecdf.csv"), ecdf_csv(summary));
  return doc;
}

json run_decompose(const std::string& metrics_path,
                   const std::string& corpus_path, const AnalysisConfig& cfg) {
  MetricFile mf;
  std::string input_path;
  if (!metrics_path.empty()) {
    mf = load_metric_jsonl(metrics_path);
    input_path = metrics_path;
  } else {
    // Score in-memory so decomposition can run straight from a corpus.
    const auto corpus = ingest::load_corpus(
        corpus_path, ingest::parse_format(cfg.format),
        {static_cast<std::size_t>(cfg.cut), cfg.snap_word_boundary});
    const auto result =
        score::score_corpus(corpus, cfg.metric_config(), cfg.threads);
    for (const auto& ps : result.pairs) {
      MetricRecord rec;
      rec.id = ps.id;
      if (ps.flagged_empty_suffix) rec.flags.push_back("empty_suffix");
      if (ps.flagged_no_generated) rec.flags.push_back("no_generated");
      rec.bundle = ps.bundle;
      mf.records.push_back(std::move(rec));
    }
    input_path = corpus_path;
  }
  const auto values = npre_values(mf);
  if (values.empty()) throw DataError("no scored records in " + input_path);

  const auto profile = fitted_hazard(values, cfg);
  const auto entries = run_mi(mf, cfg);

  json doc;
  doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  doc["config"] = cfg.to_json();
  doc["input"] = input_stamp(input_path);
  doc["bit_convention"] = decomposition::kBitConvention;
  doc["hazard"] = hazard_json(profile, cfg);
  doc["mi_mode"] = cfg.mi_mode;
  doc["mi_entries"] = entries.size();
  // Position pairs with no rows inside valid_len are omitted from the CSV;
  // surface how many were dropped.
  int effective = 0;
  for (const auto& rec : mf.records)
    if (rec.scored())
      effective = std::max(effective,
                           static_cast<int>(rec.bundle.correct_bits.size()));
  effective = std::min(effective, cfg.max_pos);
  std::size_t expected = 0;
  if (effective >= 2) {
    expected = cfg.mi_mode == "pairwise"
                   ? static_cast<std::size_t>(effective) * (effective - 1) / 2
                   : static_cast<std::size_t>(effective) - 1;
  }
  doc["mi_pairs_omitted"] = expected - entries.size();
  write_text(out_path(cfg, "decomposition.json"), doc.dump(2) + "\n");
  write_text(out_path(cfg, "hazard.csv"), hazard_csv(profile));
  write_text(out_path(cfg, "mi.csv"), mi_csv(entries, cfg.mi_mode));
  return doc;
}

json run_embed(const std::string& embeddings_path,
               const std::string& metrics_path, const AnalysisConfig& cfg,
               std::size_t sample_pairs) {
  // Binary files are recognized by their magic; anything else parses as jsonl.
  std::vector<embedding::EmbeddingRecord> records;
  {
    std::ifstream probe(embeddings_path, std::ios::binary);
    if (!probe) throw DataError("cannot open embedding file: " + embeddings_path);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    if (probe.gcount() == 4 && std::string_view(magic, 4) == "EMB1") {
      records = embedding::load_embeddings_binary(embeddings_path);
    } else {
      records = embedding::load_embeddings_jsonl(embeddings_path);
    }
  }
  const auto mf = load_metric_jsonl(metrics_path);
  embedding::SimilarityOptions opts;
  opts.threads = cfg.threads;
  opts.sample_pairs = sample_pairs;
  opts.seed = cfg.seed;
  const auto report =
      embedding::memorization_similarity_report(records, npre_by_id(mf), opts);

  std::string csv = "id,s_input,s_full,delta_s,n_pre\n";
  for (const auto& row : report.rows) {
    csv += row.id;
    csv += ',';
    csv += fmt_double(row.s_input);
    csv += ',';
    csv += fmt_double(row.s_full);
    csv += ',';
    csv += fmt_double(row.gap);
    csv += ',';
    csv += std::to_string(row.n_pre);
    csv += '\n';
  }
  write_text(out_path(cfg, "embedding_scatter.csv"), csv);

  json doc;
  doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  doc["config"] = cfg.to_json();
  doc["inputs"] = json::array({input_stamp(embeddings_path), input_stamp(metrics_path)});
  doc["rows"] = report.rows.size();
  doc["rho_s_input_vs_n_pre"] =
      report.rho_input ? json(*report.rho_input) : json(nullptr);
  doc["rho_s_full_vs_n_pre"] =
      report.rho_full ? json(*report.rho_full) : json(nullptr);
  doc["rho_delta_s_vs_n_pre"] =
      report.rho_gap ? json(*report.rho_gap) : json(nullptr);
  doc["unmatched_ids"] = report.unmatched_ids;
  if (sample_pairs > 0) {
    doc["sampled_pairs_per_record"] = sample_pairs;
    doc["sample_seed"] = cfg.seed;
  }
  write_text(out_path(cfg, "embedding_report.json"), doc.dump(2) + "\n");
  return doc;
}

json run_compare(const std::string& metrics_a, const std::string& metrics_b,
                 const AnalysisConfig& cfg) {
  const auto a = load_metric_jsonl(metrics_a);
  const auto b = load_metric_jsonl(metrics_b);
  json doc;
  doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  doc["config"] = cfg.to_json();
  doc["inputs"] = json::array({input_stamp(metrics_a), input_stamp(metrics_b)});
  doc["comparison"] = compare_runs(a, b);
  write_text(out_path(cfg, "comparison.json"), doc.dump(2) + "\n");
  return doc;
}

void run_simulate(const oracle::SimulateModel& model, std::size_t count,
                  int max_len, const AnalysisConfig& cfg,
                  const std::string& out_path_str) {
  const auto draws = oracle::simulate_npre(model, count, max_len, cfg.seed);
  std::ofstream out(out_path_str, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write simulation file: " + out_path_str);
  char idbuf[32];
  for (std::size_t i = 0; i < draws.size(); ++i) {
    std::snprintf(idbuf, sizeof(idbuf), "sim-%07zu", i);
    json j;
    j["id"] = idbuf;
    j["n_pre"] = draws[i];
    out << j.dump() << "\n";
  }
  json footer;
  footer["type"] = "summary";
  json m;
  if (model.kind == oracle::SimulateModel::Kind::geometric) {
    m["kind"] = "geometric";
    m["p"] = model.p;
  } else {
    m["kind"] = "linear";
    m["alpha"] = model.alpha;
    m["p0"] = model.p0;
  }
  footer["model"] = m;
  footer["count"] = count;
  footer["max_len"] = max_len;
  footer["seed"] = cfg.seed;
  footer["rng"] = std::string(rng::kAlgorithm);
  footer["run"] = {{"run_id", "simulated"},
                   {"checkpoint", m["kind"]},
                   {"epoch", nullptr},
                   {"loss", nullptr}};
  out << footer.dump() << "\n";
}

json run_report(const std::vector<std::string>& metric_paths,
                const AnalysisConfig& cfg, const ReportArgs& args) {
  if (metric_paths.empty())
    throw InvalidParameter("report requires at least one metric file");

  json report;
  report["tool"] = {{"name", kToolName},
                    {"version", kToolVersion},
                    {"rng", std::string(rng::kAlgorithm)},
                    {"digest_algorithm", "fnv1a64"}};
  report["seed"] = cfg.seed;
  report["config"] = cfg.to_json();
  json inputs = json::array();
  for (const auto& p : metric_paths) inputs.push_back(input_stamp(p));
  report["embeddings_input"] = args.embeddings_path.empty()
                                   ? json(nullptr)
                                   : input_stamp(args.embeddings_path);
  report["inputs"] = inputs;

  std::vector<MetricFile> files;
  files.reserve(metric_paths.size());
  for (const auto& p : metric_paths) files.push_back(load_metric_jsonl(p));

  std::string epoch_csv = "run,epoch,loss,mean,max";
  for (const double q : args.qs) epoch_csv += ",q" + fmt_double(q);
  epoch_csv += '\n';

  json runs = json::array();
  for (std::size_t r = 0; r < files.size(); ++r) {
    const auto& mf = files[r];
    const auto values = npre_values(mf);
    if (values.empty())
      throw DataError("no scored records in " + metric_paths[r]);
    const auto summary = distribution::summarize(values, args.ks, args.qs);
    const auto profile = fitted_hazard(values, cfg);
    const auto entries = run_mi(mf, cfg);

    json run;
    run["index"] = r;
    if (!mf.summary.is_null()) {
      if (mf.summary.contains("run")) run["run"] = mf.summary.at("run");
      for (const char* key :
           {"records", "scored", "flagged_empty_suffix", "flagged_no_generated",
            "parse_errors", "relation_violations", "prefix_link_violations"})
        if (mf.summary.contains(key)) run[key] = mf.summary.at(key);
    }
    run["distribution"] = summary_json(summary);
    run["hazard"] = hazard_json(profile, cfg);
    run["mi_entries"] = entries.size();
    if (cfg.bootstrap_b >= 1) {
      const auto boot = distribution::bootstrap(
          values, distribution::parse_statistic("max"), cfg.bootstrap_b,
          cfg.seed, cfg.level, cfg.threads);
      run["bootstrap"] = {{"statistic", boot.statistic}, {"point", boot.point},
                          {"lo", boot.lo},               {"hi", boot.hi},
                          {"level", boot.level},         {"replicates", boot.replicates},
                          {"seed", boot.seed},           {"rng", boot.rng}};
    }
    runs.push_back(run);

    const std::string tag = "run" + std::to_string(r);
    write_text(out_path(cfg, tag + "_ecdf.csv"), ecdf_csv(summary));
    write_text(out_path(cfg, tag + "_hazard.csv"), hazard_csv(profile));
    write_text(out_path(cfg, tag + "_missing_prob.csv"),
               missing_prob_csv(values, args.ks));
    write_text(out_path(cfg, tag + "_mi.csv"), mi_csv(entries, cfg.mi_mode));

    std::string run_id = "run" + std::to_string(r);
    std::string epoch_cell, loss_cell;
    if (!mf.summary.is_null() && mf.summary.contains("run")) {
      const auto& rj = mf.summary.at("run");
      if (rj.contains("run_id") && rj.at("run_id").is_string() &&
          !rj.at("run_id").get<std::string>().empty())
        run_id = rj.at("run_id").get<std::string>();
      if (rj.contains("epoch") && rj.at("epoch").is_number())
        epoch_cell = std::to_string(rj.at("epoch").get<int>());
      if (rj.contains("loss") && rj.at("loss").is_number())
        loss_cell = fmt_double(rj.at("loss").get<double>());
    }
    epoch_csv += run_id + "," + epoch_cell + "," + loss_cell + "," +
                 fmt_double(summary.mean) + "," + std::to_string(summary.max);
    for (const auto& [q, v] : summary.quantiles)
      epoch_csv += "," + std::to_string(v);
    epoch_csv += '\n';
  }
  report["runs"] = runs;
  write_text(out_path(cfg, "distribution_vs_epoch.csv"), epoch_csv);

  if (files.size() == 2) {
    report["comparison"] = compare_runs(files[0], files[1]);
  } else {
    report["comparison"] = nullptr;
  }

  if (!args.embeddings_path.empty()) {
    AnalysisConfig embed_cfg = cfg;
    const auto embed_doc =
        run_embed(args.embeddings_path, metric_paths[0], embed_cfg);
    json e;
    for (const char* key : {"rows", "rho_s_input_vs_n_pre",
                            "rho_s_full_vs_n_pre", "rho_delta_s_vs_n_pre",
                            "unmatched_ids"})
      e[key] = embed_doc.at(key);
    report["embedding"] = e;
  } else {
    report["embedding"] = nullptr;
  }

  write_text(out_path(cfg, "report.json"), report.dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------------------
// Theorem verification.

namespace {

// Two replicated sequences share the most probable full suffix while the
// majority mass splits over near-duplicates; greedy term-wise choice then
// fully memorizes fewer sequences than the full-suffix argmax.
constexpr const char* kReplicatedPrefixFixture =
    "@prefix_len 0\n"
    "2 0 0 0 0 0 0\n"
    "1 1 2 3 4 5 6\n"
    "1 1 3 2 4 5 6\n"
    "1 1 4 2 3 5 6\n"
    "1 1 5 2 3 4 6\n"
    "1 1 6 2 3 4 5\n";

// Four equally likely two-position rows whose positions are independent even
// though rows differ in how strongly they are memorized.
constexpr const char* kIndependentBitsFixture =
    "@prefix_len 0\n"
    "1 0 1\n"
    "1 1 0\n"
    "1 1 1\n"
    "1 0 0\n";

bool check(std::ostream& out, const std::string& name, bool ok) {
  out << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
  return ok;
}

}  // namespace

bool run_verify(std::ostream& out, std::size_t instances, std::uint64_t seed,
                const std::string& extra_dist_path) {
  bool all = true;
  const double tol = 1e-12;

  {
    const auto dist = oracle::ToyDistribution::parse(kReplicatedPrefixFixture);
    const auto gap = oracle::boc_vs_termwise_gap(dist, 6);
    all &= check(out,
                 "replicated-prefix fixture: full-suffix argmax 2/7, greedy 1/7, "
                 "divergence at position 1",
                 std::abs(gap.boc_full_match - 2.0 / 7.0) < tol &&
                     std::abs(gap.termwise_full_match - 1.0 / 7.0) < tol &&
                     gap.divergence_index && *gap.divergence_index == 1);
  }
  {
    const auto dist = oracle::ToyDistribution::parse(kIndependentBitsFixture);
    std::vector<std::uint8_t> x, y;
    for (std::size_t i = 0; i < dist.seqs.size(); ++i) {
      // Tokens are "0"/"1"; weights are uniform so each row counts once.
      x.push_back(dist.alphabet[static_cast<std::size_t>(dist.seqs[i][0])] == "1");
      y.push_back(dist.alphabet[static_cast<std::size_t>(dist.seqs[i][1])] == "1");
    }
    const double mi = decomposition::mutual_information_binary(x, y);
    all &= check(out, "independent-bits fixture: MI(C1,C2) == 0 exactly",
                 mi == 0.0);
  }
  {
    bool ok = true;
    for (std::size_t i = 0; i < instances && ok; ++i) {
      const auto dist = oracle::random_instance(seed ^ (i + 1), 4, 4);
      const int n = dist.suffix_len();
      const auto gap = oracle::boc_vs_termwise_gap(dist, n);
      ok = gap.boc_full_match >= gap.termwise_full_match - tol;
    }
    all &= check(out,
                 "full-suffix argmax expected match >= greedy on " +
                     std::to_string(instances) + " random instances",
                 ok);
  }
  {
    bool ok = true;
    auto eng = rng::Engine(seed ^ 0x5151u);
    for (std::size_t i = 0; i < 10000 && ok; ++i) {
      const std::size_t k = 2 + eng.bounded(6);
      oracle::TokenDist p, q;
      double sp = 0.0, sq = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        const std::string tok(1, static_cast<char>('a' + t));
        p[tok] = eng.uniform() + 1e-9;
        q[tok] = eng.uniform() + 1e-9;
        sp += p[tok];
        sq += q[tok];
      }
      double max_p = 0.0;
      for (auto& [tok, v] : p) {
        v /= sp;
        max_p = std::max(max_p, v);
      }
      for (auto& [tok, v] : q) v /= sq;
      ok = oracle::expected_match_under_sampling(p, q) <= max_p + tol;
    }
    all &= check(out,
                 "expected match under any sampling <= max p on 10000 random "
                 "distribution pairs",
                 ok);
  }
  {
    const auto pi = oracle::ToyDistribution::parse(kReplicatedPrefixFixture);
    const auto same = oracle::greedy_matches_termwise(pi, pi, 6);
    bool ok = std::all_of(same.matches.begin(), same.matches.end(),
                          [](bool b) { return b; }) &&
              std::all_of(same.argmax_agree.begin(), same.argmax_agree.end(),
                          [](bool b) { return b; });
    // Rescaling that preserves every conditional argmax: boosting the
    // sequence the greedy path already follows leaves each step's winner
    // unchanged while the distributions now differ.
    auto scaled_entries = std::vector<std::pair<std::vector<std::string>, double>>{};
    for (std::size_t i = 0; i < pi.seqs.size(); ++i)
      scaled_entries.emplace_back(pi.tokens_of(i),
                                  pi.probs[i] * (i == 1 ? 1.2 : 1.0));
    const auto scaled =
        oracle::ToyDistribution::from_weighted(scaled_entries, 0);
    const auto cmp2 = oracle::greedy_matches_termwise(pi, scaled, 6);
    ok = ok && std::all_of(cmp2.matches.begin(), cmp2.matches.end(),
                           [](bool b) { return b; });
    // Flipping the argmax at position 1 must break the match immediately.
    auto flipped_entries = scaled_entries;
    flipped_entries[0].second = 10.0;  // "000000" dominates position 1
    const auto flipped =
        oracle::ToyDistribution::from_weighted(flipped_entries, 0);
    const auto cmp3 = oracle::greedy_matches_termwise(pi, flipped, 6);
    ok = ok && !cmp3.matches[0] && !cmp3.argmax_agree[0];
    all &= check(out, "greedy matches term-wise iff argmaxes agree", ok);
  }
  if (!extra_dist_path.empty()) {
    const auto dist = oracle::ToyDistribution::load_file(extra_dist_path);
    const int n = std::min(dist.suffix_len(), oracle::kMaxSuffixLen);
    const auto gap = oracle::boc_vs_termwise_gap(dist, n);
    all &= check(out,
                 "user distribution: full-suffix argmax >= greedy (" +
                     fmt_double(gap.boc_full_match) + " vs " +
                     fmt_double(gap.termwise_full_match) + ")",
                 gap.boc_full_match >= gap.termwise_full_match - tol);
  }
  return all;
}

}  // namespace memaudit::pipeline
