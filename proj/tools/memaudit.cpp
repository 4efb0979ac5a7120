#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "memaudit/error.hpp"
#include "memaudit/oracle.hpp"
#include "memaudit/pipeline.hpp"

namespace {

using memaudit::pipeline::AnalysisConfig;

struct GlobalFlags {
  std::string config_file;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string output_dir;
};

void apply_globals(const CLI::App& app, const GlobalFlags& g,
                   AnalysisConfig& cfg) {
  if (app.count("--seed")) cfg.seed = g.seed;
  if (app.count("--threads")) cfg.threads = g.threads;
  if (app.count("--output-dir")) cfg.output_dir = g.output_dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "memaudit - prefix-continuation memorization analysis for generation "
      "logs"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalFlags g;
  app.add_option("--config", g.config_file,
                 "flat key = value config file mirroring the analysis "
                 "defaults");
  app.add_option("--seed", g.seed, "base RNG seed");
  app.add_option("--threads", g.threads, "worker threads (0 = runtime default)");
  app.add_option("--output-dir", g.output_dir, "directory for emitted files");

  // split ---------------------------------------------------------------
  auto* split = app.add_subcommand(
      "split", "cut references into prefix/suffix and tokenize");
  std::string split_input, split_out = "split.jsonl";
  int split_cut = -1;
  std::string split_format;
  bool split_snap = false;
  split->add_option("input", split_input, "corpus file")->required();
  split->add_option("--out", split_out, "output path");
  split->add_option("--cut", split_cut, "prefix length in characters");
  split->add_option("--format", split_format, "jsonl|tsv");
  split->add_flag("--snap-word-boundary", split_snap,
                  "move a mid-word cut to the end of the word");

  // score ---------------------------------------------------------------
  auto* score = app.add_subcommand(
      "score", "compute per-pair similarity and memorization metrics");
  std::string score_input, score_out = "metrics.jsonl",
              score_out_format = "jsonl", score_manifest, score_format;
  int score_cut = -1, score_max_pos = -1;
  double score_dw_base = -1.0;
  std::vector<int> score_rouge;
  bool score_snap = false;
  score->add_option("input", score_input, "corpus file")->required();
  score->add_option("--out", score_out, "metric file path");
  score->add_option("--out-format", score_out_format, "jsonl|csv");
  score->add_option("--manifest", score_manifest, "run metadata file");
  score->add_option("--cut", score_cut, "prefix length in characters");
  score->add_option("--format", score_format, "jsonl|tsv");
  score->add_option("--rouge-n", score_rouge, "ROUGE n-gram orders");
  score->add_option("--dw-base", score_dw_base, "weighted distance base w");
  int score_dw_trunc = -1;
  score->add_option("--dw-truncation", score_dw_trunc,
                    "weighted distance truncation N (0 = max(N1,N2))");
  score->add_option("--max-pos", score_max_pos,
                    "cap for serialized per-position bits");
  score->add_flag("--snap-word-boundary", score_snap,
                  "move a mid-word cut to the end of the word");

  // distribution ----------------------------------------------------------
  auto* dist = app.add_subcommand(
      "distribution", "summarize the n_pre distribution of one run");
  std::string dist_input;
  memaudit::pipeline::DistributionArgs dist_args;
  std::uint32_t dist_bootstrap = 0;
  double dist_level = -1.0;
  dist->add_option("metrics", dist_input, "metric file")->required();
  dist->add_option("--ks", dist_args.ks, "top-k depths");
  dist->add_option("--quantiles", dist_args.qs, "quantile levels");
  dist->add_option("--bootstrap", dist_bootstrap, "bootstrap replicates B");
  dist->add_option("--statistic", dist_args.statistic,
                   "max | mean | quantile:Q | topk-mean:K");
  dist->add_option("--level", dist_level, "confidence level");

  // decompose -------------------------------------------------------------
  auto* dec = app.add_subcommand(
      "decompose", "hazard estimates, model fits, and MI structure");
  std::string dec_metrics, dec_corpus, dec_mi_mode, dec_format;
  int dec_max_pos = -1, dec_cut = -1;
  std::int64_t dec_min_at_risk = -1;
  dec->add_option("--metrics", dec_metrics, "metric file input");
  dec->add_option("--corpus", dec_corpus, "corpus file input");
  dec->add_option("--mi-mode", dec_mi_mode, "pairwise | prefix-conjunction");
  dec->add_option("--max-pos", dec_max_pos, "maximum tested position N");
  dec->add_option("--min-at-risk", dec_min_at_risk,
                  "at-risk floor for the linear hazard fit");
  dec->add_option("--cut", dec_cut, "prefix length (corpus input)");
  dec->add_option("--format", dec_format, "jsonl|tsv (corpus input)");

  // embed -------------------------------------------------------------------
  auto* embed = app.add_subcommand(
      "embed", "similarity gap analysis from supplied embedding vectors");
  std::string embed_input, embed_metrics;
  std::size_t embed_sample = 0;
  embed->add_option("embeddings", embed_input, "embedding file (jsonl or packed)")
      ->required();
  embed->add_option("--metrics", embed_metrics, "metric file for n_pre values")
      ->required();
  embed->add_option("--sample-pairs", embed_sample,
                    "estimate each mean from this many sampled partners "
                    "(0 = exact; intended for corpora beyond ~50k records)");

  // compare -------------------------------------------------------------
  auto* compare = app.add_subcommand(
      "compare", "signed-rank comparison of two runs joined on id");
  std::string cmp_a, cmp_b;
  compare->add_option("metrics_a", cmp_a, "first metric file")->required();
  compare->add_option("metrics_b", cmp_b, "second metric file")->required();

  // simulate ------------------------------------------------------------
  auto* sim = app.add_subcommand(
      "simulate", "draw synthetic n_pre samples from a hazard model");
  std::string sim_model = "geometric", sim_out = "simulated.jsonl";
  double sim_p = 0.5, sim_alpha = 0.0, sim_p0 = 0.5;
  std::size_t sim_count = 10000;
  int sim_max_len = 128;
  sim->add_option("--model", sim_model, "geometric | linear");
  sim->add_option("--p", sim_p, "geometric continuation probability");
  sim->add_option("--alpha", sim_alpha, "linear hazard slope");
  sim->add_option("--p0", sim_p0, "linear hazard intercept");
  sim->add_option("--count", sim_count, "number of draws");
  sim->add_option("--max-len", sim_max_len, "truncation length");
  sim->add_option("--out", sim_out, "output path");

  // verify-theorems -------------------------------------------------------
  auto* verify = app.add_subcommand(
      "verify-theorems", "exact small-instance checks of the classifier bounds");
  std::size_t verify_instances = 1000;
  std::string verify_dist;
  verify->add_option("--instances", verify_instances,
                     "random instances per property");
  verify->add_option("--dist", verify_dist, "extra toy distribution file");

  // report ----------------------------------------------------------------
  auto* report = app.add_subcommand(
      "report", "combined multi-run report with plot-ready CSVs");
  std::vector<std::string> report_inputs;
  memaudit::pipeline::ReportArgs report_args;
  std::uint32_t report_bootstrap = 0;
  report->add_option("metrics", report_inputs, "metric files, one per run")
      ->required();
  report->add_option("--embeddings", report_args.embeddings_path,
                     "embedding file for the first run");
  report->add_option("--ks", report_args.ks, "top-k depths");
  report->add_option("--quantiles", report_args.qs, "quantile levels");
  report->add_option("--bootstrap", report_bootstrap, "bootstrap replicates B");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    AnalysisConfig cfg;
    if (!g.config_file.empty())
      cfg = memaudit::pipeline::load_config_file(g.config_file);
    apply_globals(app, g, cfg);

    if (split->parsed()) {
      if (split->count("--cut")) cfg.cut = split_cut;
      if (split->count("--format")) cfg.format = split_format;
      if (split_snap) cfg.snap_word_boundary = true;
      memaudit::pipeline::run_split(split_input, cfg, split_out);
      std::cout << "wrote " << split_out << "\n";
      return 0;
    }
    if (score->parsed()) {
      if (score->count("--cut")) cfg.cut = score_cut;
      if (score->count("--format")) cfg.format = score_format;
      if (score->count("--rouge-n")) cfg.rouge_ns = score_rouge;
      if (score->count("--dw-base")) cfg.d_w_base = score_dw_base;
      if (score->count("--dw-truncation")) cfg.d_w_truncation = score_dw_trunc;
      if (score->count("--max-pos")) cfg.max_pos = score_max_pos;
      if (score_snap) cfg.snap_word_boundary = true;
      const auto summary = memaudit::pipeline::run_score(
          score_input, cfg, score_out, score_out_format, score_manifest);
      std::cout << "scored " << summary.scored << "/" << summary.records
                << " records (" << summary.flagged_empty_suffix
                << " empty-suffix, " << summary.flagged_no_generated
                << " without generation, " << summary.parse_errors
                << " parse errors); relation violations: "
                << summary.relation_violations << "\n";
      return 0;
    }
    if (dist->parsed()) {
      if (dist->count("--bootstrap")) cfg.bootstrap_b = dist_bootstrap;
      if (dist->count("--level")) cfg.level = dist_level;
      memaudit::pipeline::run_distribution(dist_input, cfg, dist_args);
      std::cout << "wrote distribution_summary.json and ecdf.csv to "
                << cfg.output_dir << "\n";
      return 0;
    }
    if (dec->parsed()) {
      if (dec_metrics.empty() && dec_corpus.empty())
        throw memaudit::InvalidParameter(
            "decompose needs --metrics or --corpus");
      if (dec->count("--mi-mode")) cfg.mi_mode = dec_mi_mode;
      if (dec->count("--max-pos")) cfg.max_pos = dec_max_pos;
      if (dec->count("--min-at-risk"))
        cfg.min_at_risk = static_cast<std::size_t>(dec_min_at_risk);
      if (dec->count("--cut")) cfg.cut = dec_cut;
      if (dec->count("--format")) cfg.format = dec_format;
      memaudit::pipeline::run_decompose(dec_metrics, dec_corpus, cfg);
      std::cout << "wrote decomposition.json, hazard.csv, mi.csv to "
                << cfg.output_dir << "\n";
      return 0;
    }
    if (embed->parsed()) {
      memaudit::pipeline::run_embed(embed_input, embed_metrics, cfg,
                                    embed_sample);
      std::cout << "wrote embedding_report.json and embedding_scatter.csv to "
                << cfg.output_dir << "\n";
      return 0;
    }
    if (compare->parsed()) {
      const auto doc = memaudit::pipeline::run_compare(cmp_a, cmp_b, cfg);
      std::cout << doc.at("comparison").dump(2) << "\n";
      return 0;
    }
    if (sim->parsed()) {
      memaudit::oracle::SimulateModel model;
      if (sim_model == "geometric") {
        model.kind = memaudit::oracle::SimulateModel::Kind::geometric;
        model.p = sim_p;
      } else if (sim_model == "linear") {
        model.kind = memaudit::oracle::SimulateModel::Kind::linear;
        model.alpha = sim_alpha;
        model.p0 = sim_p0;
      } else {
        throw memaudit::InvalidParameter("unknown model: " + sim_model);
      }
      memaudit::pipeline::run_simulate(model, sim_count, sim_max_len, cfg,
                                       sim_out);
      std::cout << "wrote " << sim_out << "\n";
      return 0;
    }
    if (verify->parsed()) {
      const bool ok = memaudit::pipeline::run_verify(
          std::cout, verify_instances, cfg.seed, verify_dist);
      return ok ? 0 : 3;
    }
    if (report->parsed()) {
      if (report->count("--bootstrap")) cfg.bootstrap_b = report_bootstrap;
      memaudit::pipeline::run_report(report_inputs, cfg, report_args);
      std::cout << "wrote report.json and plot CSVs to " << cfg.output_dir
                << "\n";
      return 0;
    }
    return 1;
  } catch (const memaudit::InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const memaudit::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
