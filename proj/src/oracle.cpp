#include "memaudit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "memaudit/error.hpp"
#include "memaudit/rng.hpp"

namespace memaudit::oracle {

std::vector<std::string> ToyDistribution::tokens_of(std::size_t i) const {
  std::vector<std::string> out;
  out.reserve(seqs[i].size());
  for (const auto id : seqs[i])
    out.push_back(alphabet[static_cast<std::size_t>(id)]);
  return out;
}

ToyDistribution ToyDistribution::from_weighted(
    const std::vector<std::pair<std::vector<std::string>, double>>& entries,
    int prefix_len) {
  if (entries.empty())
    throw InvalidParameter("toy distribution needs at least one sequence");
  if (prefix_len < 0) throw InvalidParameter("prefix_len must be >= 0");

  std::set<std::string> tokens;
  const std::size_t len = entries[0].first.size();
  double total = 0.0;
  for (const auto& [seq, w] : entries) {
    if (seq.size() != len)
      throw InvalidParameter("all sequences must have equal length");
    if (!(w > 0.0)) throw InvalidParameter("sequence weights must be > 0");
    total += w;
    for (const auto& t : seq) tokens.insert(t);
  }
  if (static_cast<std::size_t>(prefix_len) > len)
    throw InvalidParameter("prefix_len exceeds sequence length");

  ToyDistribution d;
  d.alphabet.assign(tokens.begin(), tokens.end());
  d.prefix_len = prefix_len;
  std::map<std::string, std::int32_t> id_of;
  for (std::size_t i = 0; i < d.alphabet.size(); ++i)
    id_of[d.alphabet[i]] = static_cast<std::int32_t>(i);

  // Merge duplicate sequences so each support point appears once.
  std::map<std::vector<std::int32_t>, double> merged;
  for (const auto& [seq, w] : entries) {
    std::vector<std::int32_t> ids;
    ids.reserve(seq.size());
    for (const auto& t : seq) ids.push_back(id_of[t]);
    merged[ids] += w;
  }
  for (const auto& [ids, w] : merged) {
    d.seqs.push_back(ids);
    d.probs.push_back(w / total);
  }
  return d;
}

ToyDistribution ToyDistribution::parse(const std::string& text) {
  std::vector<std::pair<std::vector<std::string>, double>> entries;
  int prefix_len = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "@prefix_len") {
      if (!(ls >> prefix_len))
        throw DataError("bad @prefix_len at line " + std::to_string(lineno));
      continue;
    }
    double weight = 0.0;
    try {
      weight = std::stod(first);
    } catch (const std::exception&) {
      throw DataError("expected a weight at line " + std::to_string(lineno));
    }
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (tokens.empty())
      throw DataError("sequence missing at line " + std::to_string(lineno));
    entries.emplace_back(std::move(tokens), weight);
  }
  return from_weighted(entries, prefix_len);
}

ToyDistribution ToyDistribution::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open distribution file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ToyDistribution::serialize() const {
  std::ostringstream out;
  out << "@prefix_len " << prefix_len << "\n";
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    out << probs[i];
    for (const auto id : seqs[i])
      out << ' ' << alphabet[static_cast<std::size_t>(id)];
    out << "\n";
  }
  return out.str();
}

namespace {

using IdSeq = std::vector<std::int32_t>;

void check_limits(const ToyDistribution& d, int n) {
  if (d.alphabet.size() > kMaxAlphabet)
    throw InvalidParameter("alphabet exceeds the enumeration limit");
  if (n > kMaxSuffixLen)
    throw InvalidParameter("suffix length exceeds the enumeration limit");
  if (n < 1 || n > d.suffix_len())
    throw InvalidParameter("suffix length out of range for this distribution");
}

// Sequence indices grouped by prefix value, prefix-lexicographic order.
std::map<IdSeq, std::vector<std::size_t>> group_by_prefix(
    const ToyDistribution& d) {
  std::map<IdSeq, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < d.seqs.size(); ++i) {
    IdSeq prefix(d.seqs[i].begin(),
                 d.seqs[i].begin() + d.prefix_len);
    groups[prefix].push_back(i);
  }
  return groups;
}

double group_mass(const ToyDistribution& d, const std::vector<std::size_t>& g) {
  double m = 0.0;
  for (const auto i : g) m += d.probs[i];
  return m;
}

std::vector<std::string> to_tokens(const ToyDistribution& d, const IdSeq& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (const auto id : ids) out.push_back(d.alphabet[static_cast<std::size_t>(id)]);
  return out;
}

// Survival masses along a fixed predicted suffix: mass[j] = total probability
// of group members whose first j suffix tokens equal the prediction.
std::vector<double> survival_masses(const ToyDistribution& d,
                                    const std::vector<std::size_t>& group,
                                    const IdSeq& predicted) {
  std::vector<double> mass(predicted.size() + 1, 0.0);
  for (const auto i : group) {
    const auto& seq = d.seqs[i];
    std::size_t j = 0;
    while (j < predicted.size() &&
           seq[static_cast<std::size_t>(d.prefix_len) + j] == predicted[j])
      ++j;
    for (std::size_t k = 0; k <= j; ++k) mass[k] += d.probs[i];
  }
  return mass;
}

ClassifierResult assemble(const ToyDistribution& d, int n,
                          const std::map<IdSeq, IdSeq>& predicted_by_prefix) {
  ClassifierResult result;
  const auto groups = group_by_prefix(d);
  // survived[j] / survived[j-1] aggregated over prefixes gives the
  // conditional match probability at step j.
  std::vector<double> survived(static_cast<std::size_t>(n) + 1, 0.0);
  for (const auto& [prefix, group] : groups) {
    const auto& predicted = predicted_by_prefix.at(prefix);
    const auto mass = survival_masses(d, group, predicted);
    const double p_prefix = group_mass(d, group);
    PrefixPrediction pp;
    pp.prefix = to_tokens(d, prefix);
    pp.predicted = to_tokens(d, predicted);
    pp.prefix_prob = p_prefix;
    pp.full_match_prob = mass.back() / p_prefix;
    result.predictions.push_back(std::move(pp));
    for (std::size_t j = 0; j < mass.size(); ++j) survived[j] += mass[j];
  }
  result.expected_full_match = survived.back();
  result.bayes_risk = 1.0 - result.expected_full_match;
  for (int j = 1; j <= n; ++j) {
    const double prev = survived[static_cast<std::size_t>(j) - 1];
    result.per_position_match.push_back(
        prev > 0.0 ? survived[static_cast<std::size_t>(j)] / prev : 0.0);
  }
  return result;
}

}  // namespace

ClassifierResult bayes_optimal(const ToyDistribution& dist, int n) {
  check_limits(dist, n);
  std::map<IdSeq, IdSeq> predicted;
  for (const auto& [prefix, group] : group_by_prefix(dist)) {
    // Aggregate suffix masses; std::map iteration gives lexicographic order,
    // so keeping the first strict maximum breaks ties lexicographically.
    std::map<IdSeq, double> suffix_mass;
    for (const auto i : group) {
      IdSeq suffix(dist.seqs[i].begin() + dist.prefix_len,
                   dist.seqs[i].begin() + dist.prefix_len + n);
      suffix_mass[suffix] += dist.probs[i];
    }
    const IdSeq* best = nullptr;
    double best_mass = -1.0;
    for (const auto& [suffix, mass] : suffix_mass) {
      if (mass > best_mass) {
        best = &suffix;
        best_mass = mass;
      }
    }
    predicted[prefix] = *best;
  }
  return assemble(dist, n, predicted);
}

ClassifierResult termwise_boc(const ToyDistribution& dist, int n,
                              const std::vector<int>* tie_order) {
  check_limits(dist, n);
  if (tie_order && tie_order->size() != dist.alphabet.size())
    throw InvalidParameter("tie_order must rank every alphabet token");
  auto rank = [&](std::int32_t id) {
    return tie_order ? (*tie_order)[static_cast<std::size_t>(id)]
                     : static_cast<int>(id);
  };

  std::map<IdSeq, IdSeq> predicted;
  for (const auto& [prefix, group] : group_by_prefix(dist)) {
    std::vector<std::size_t> alive(group.begin(), group.end());
    IdSeq path;
    for (int j = 0; j < n; ++j) {
      std::map<std::int32_t, double> token_mass;
      for (const auto i : alive)
        token_mass[dist.seqs[i][static_cast<std::size_t>(dist.prefix_len + j)]] +=
            dist.probs[i];
      internal_check(!token_mass.empty(),
                     "greedy path reached a zero-mass conditioning event");
      std::int32_t best = -1;
      double best_mass = -1.0;
      for (const auto& [id, mass] : token_mass) {
        if (mass > best_mass ||
            (mass == best_mass && rank(id) < rank(best))) {
          best = id;
          best_mass = mass;
        }
      }
      path.push_back(best);
      std::vector<std::size_t> next;
      for (const auto i : alive)
        if (dist.seqs[i][static_cast<std::size_t>(dist.prefix_len + j)] == best)
          next.push_back(i);
      alive = std::move(next);
    }
    predicted[prefix] = path;
  }
  return assemble(dist, n, predicted);
}

double expected_match_under_sampling(const TokenDist& p, const TokenDist& q) {
  if (p.size() != q.size())
    throw InvalidParameter("distributions must share an alphabet");
  double sum = 0.0;
  auto itp = p.begin();
  auto itq = q.begin();
  for (; itp != p.end(); ++itp, ++itq) {
    if (itp->first != itq->first)
      throw InvalidParameter("distributions must share an alphabet");
    sum += itp->second * itq->second;
  }
  return sum;
}

GreedyComparison greedy_matches_termwise(const ToyDistribution& pi,
                                         const ToyDistribution& pi_m, int n) {
  check_limits(pi, n);
  check_limits(pi_m, n);
  if (pi.alphabet != pi_m.alphabet || pi.seq_len() != pi_m.seq_len() ||
      pi.prefix_len != pi_m.prefix_len)
    throw InvalidParameter(
        "distributions must share alphabet, lengths, and prefix length");

  const auto groups_pi = group_by_prefix(pi);
  const auto groups_m = group_by_prefix(pi_m);

  GreedyComparison cmp;
  cmp.matches.assign(static_cast<std::size_t>(n), true);
  cmp.argmax_agree.assign(static_cast<std::size_t>(n), true);

  // Conditional argmax of dist given a fixed context of suffix tokens;
  // nullopt when the context has zero mass.
  auto cond_argmax = [](const ToyDistribution& d,
                        const std::vector<std::size_t>& group,
                        const IdSeq& context,
                        int j) -> std::optional<std::int32_t> {
    std::map<std::int32_t, double> token_mass;
    for (const auto i : group) {
      bool consistent = true;
      for (std::size_t k = 0; k < context.size() && consistent; ++k)
        consistent = d.seqs[i][static_cast<std::size_t>(d.prefix_len) + k] ==
                     context[k];
      if (!consistent) continue;
      token_mass[d.seqs[i][static_cast<std::size_t>(d.prefix_len + j)]] +=
          d.probs[i];
    }
    if (token_mass.empty()) return std::nullopt;
    std::int32_t best = -1;
    double best_mass = -1.0;
    for (const auto& [id, mass] : token_mass)
      if (mass > best_mass) {
        best = id;
        best_mass = mass;
      }
    return best;
  };

  for (const auto& [prefix, group_m] : groups_m) {
    const auto it_pi = groups_pi.find(prefix);
    if (it_pi == groups_pi.end())
      throw InvalidParameter("prefix support mismatch between distributions");
    const auto& group_pi = it_pi->second;

    IdSeq greedy_path, termwise_path;
    for (int j = 0; j < n; ++j) {
      const auto greedy = cond_argmax(pi_m, group_m, greedy_path, j);
      internal_check(greedy.has_value(),
                     "greedy path reached a zero-mass conditioning event");
      const auto true_on_greedy = cond_argmax(pi, group_pi, greedy_path, j);
      const auto termwise = cond_argmax(pi, group_pi, termwise_path, j);

      const bool agree = true_on_greedy.has_value() && *true_on_greedy == *greedy;
      if (!agree) cmp.argmax_agree[static_cast<std::size_t>(j)] = false;
      const bool match = termwise.has_value() && *termwise == *greedy;
      if (!match) cmp.matches[static_cast<std::size_t>(j)] = false;

      greedy_path.push_back(*greedy);
      termwise_path.push_back(termwise.value_or(*greedy));
    }
  }
  return cmp;
}

namespace {

std::map<std::vector<std::string>, double> sequence_map(
    const ToyDistribution& d) {
  std::map<std::vector<std::string>, double> m;
  for (std::size_t i = 0; i < d.seqs.size(); ++i) m[d.tokens_of(i)] += d.probs[i];
  return m;
}

}  // namespace

KlResult kl_divergence(const ToyDistribution& pi, const ToyDistribution& pi_m) {
  const auto p = sequence_map(pi);
  const auto q = sequence_map(pi_m);
  KlResult r;
  for (const auto& [seq, pp] : p) {
    const auto it = q.find(seq);
    if (it == q.end() || it->second == 0.0) {
      r.finite = false;
      r.nats = std::numeric_limits<double>::infinity();
      return r;
    }
    r.nats += pp * std::log(pp / it->second);
  }
  r.nats = std::max(0.0, r.nats);
  return r;
}

std::vector<KlResult> kl_per_position(const ToyDistribution& pi,
                                      const ToyDistribution& pi_m) {
  if (pi.seq_len() != pi_m.seq_len())
    throw InvalidParameter("distributions must have equal sequence length");
  const int len = pi.seq_len();
  std::vector<KlResult> out;
  for (int j = 0; j < len; ++j) {
    // Contexts are the first j tokens; aggregate pi mass per (context, token).
    std::map<IdSeq, std::map<std::string, double>> ctx_p, ctx_q;
    std::map<IdSeq, double> ctx_mass_p, ctx_mass_q;
    auto fill = [&](const ToyDistribution& d,
                    std::map<IdSeq, std::map<std::string, double>>& ctx_tok,
                    std::map<IdSeq, double>& ctx_mass) {
      for (std::size_t i = 0; i < d.seqs.size(); ++i) {
        IdSeq ctx;
        for (int k = 0; k < j; ++k) ctx.push_back(d.seqs[i][static_cast<std::size_t>(k)]);
        const auto& tok =
            d.alphabet[static_cast<std::size_t>(d.seqs[i][static_cast<std::size_t>(j)])];
        ctx_tok[ctx][tok] += d.probs[i];
        ctx_mass[ctx] += d.probs[i];
      }
    };
    // Contexts are keyed by token ids, which only line up if alphabets match.
    if (pi.alphabet != pi_m.alphabet)
      throw InvalidParameter("per-position KL requires a shared alphabet");
    fill(pi, ctx_p, ctx_mass_p);
    fill(pi_m, ctx_q, ctx_mass_q);

    KlResult r;
    for (const auto& [ctx, toks] : ctx_p) {
      const auto itq = ctx_q.find(ctx);
      for (const auto& [tok, mass] : toks) {
        const double p_cond = mass / ctx_mass_p.at(ctx);
        double q_cond = 0.0;
        if (itq != ctx_q.end()) {
          const auto itt = itq->second.find(tok);
          if (itt != itq->second.end())
            q_cond = itt->second / ctx_mass_q.at(ctx);
        }
        if (q_cond == 0.0) {
          r.finite = false;
          r.nats = std::numeric_limits<double>::infinity();
          break;
        }
        r.nats += ctx_mass_p.at(ctx) * p_cond * std::log(p_cond / q_cond);
      }
      if (!r.finite) break;
    }
    out.push_back(r);
  }
  return out;
}

std::vector<int> simulate_npre(const SimulateModel& model, std::size_t count,
                               int max_len, std::uint64_t seed) {
  if (count < 1) throw InvalidParameter("simulate requires count >= 1");
  if (max_len < 0) throw InvalidParameter("simulate requires max_len >= 0");
  if (model.kind == SimulateModel::Kind::geometric &&
      (model.p < 0.0 || model.p > 1.0))
    throw InvalidParameter("geometric p must be in [0,1]");
  auto hazard = [&](int j) {
    if (model.kind == SimulateModel::Kind::geometric) return model.p;
    return std::clamp(model.alpha * static_cast<double>(j) + model.p0, 0.0, 1.0);
  };
  std::vector<int> draws(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto eng = rng::replicate_engine(seed, i);
    int n = 0;
    while (n < max_len && eng.uniform() < hazard(n + 1)) ++n;
    draws[i] = n;
  }
  return draws;
}

GapResult boc_vs_termwise_gap(const ToyDistribution& dist, int n) {
  const auto boc = bayes_optimal(dist, n);
  const auto tw = termwise_boc(dist, n);
  GapResult gap;
  gap.boc_full_match = boc.expected_full_match;
  gap.termwise_full_match = tw.expected_full_match;
  for (std::size_t g = 0; g < boc.predictions.size(); ++g) {
    const auto& a = boc.predictions[g].predicted;
    const auto& b = tw.predictions[g].predicted;
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a[j] != b[j]) {
        const int idx = static_cast<int>(j) + 1;
        if (!gap.divergence_index || idx < *gap.divergence_index)
          gap.divergence_index = idx;
        break;
      }
    }
  }
  return gap;
}

ToyDistribution random_instance(std::uint64_t seed, std::size_t max_alphabet,
                                int max_len, int prefix_len) {
  auto eng = rng::Engine(seed);
  const auto a = 2 + eng.bounded(max_alphabet - 1);  // alphabet size 2..max
  const int len =
      std::max(prefix_len + 1,
               1 + static_cast<int>(eng.bounded(static_cast<std::uint64_t>(max_len))));
  const auto support = 1 + eng.bounded(12);

  std::vector<std::pair<std::vector<std::string>, double>> entries;
  for (std::uint64_t s = 0; s < support; ++s) {
    std::vector<std::string> seq;
    for (int j = 0; j < len; ++j)
      seq.push_back(std::string(1, static_cast<char>('a' + eng.bounded(a))));
    entries.emplace_back(std::move(seq), 1.0 + static_cast<double>(eng.bounded(9)));
  }
  return ToyDistribution::from_weighted(entries, prefix_len);
}

}  // namespace memaudit::oracle
