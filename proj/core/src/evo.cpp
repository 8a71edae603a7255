#include "onealign/evo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "onealign/binio.hpp"
#include "onealign/error.hpp"
#include "onealign/metrics.hpp"
#include "onealign/rng.hpp"

namespace onealign {

Embedder lookup_embedder(const EmbeddingSet& set) {
  return [&set](const MsaRecord& r) {
    auto row = set.find(r.name);
    if (!row) fail(ErrorCode::MissingId, "no embedding for " + r.name);
    auto v = set.row(*row);
    return std::vector<double>(v.begin(), v.end());
  };
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::ShapeMismatch, "embedding widths differ");
  const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  return dot(a, b) / (na * nb);
}

namespace {

EvoGroupStats group(std::vector<double> sims) {
  EvoGroupStats g;
  std::vector<double> sorted = sims;
  std::sort(sorted.begin(), sorted.end());
  g.median = quantile_sorted(sorted, 0.5);
  g.mean = std::accumulate(sims.begin(), sims.end(), 0.0) / static_cast<double>(sims.size());
  g.similarities = std::move(sims);
  return g;
}

nlohmann::json test_json(const WilcoxonResult& w) {
  return {{"statistic", w.statistic},
          {"p_value", w.p_value},
          {"alternative", to_string(w.alternative)},
          {"method", to_string(w.method)}};
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

}  // namespace

EvoReport evo_relatedness_report(const Embedder& embed, const std::vector<std::vector<MsaRecord>>& msas,
                                 const std::vector<MsaRecord>& pool, const EvoOptions& opt) {
  if (msas.empty()) fail(ErrorCode::TooFewSequences, "no MSA given");
  EvoReport report;
  Rng rng(opt.seed);
  std::vector<double> all_sim, all_div, all_unrel, med_sim, med_div, med_unrel;
  for (std::size_t f = 0; f < msas.size(); ++f) {
    const auto& msa = msas[f];
    if (msa.size() < opt.k_sim + opt.k_div + 1) {
      fail(ErrorCode::TooFewSequences, "MSA " + std::to_string(f) + " has " + std::to_string(msa.size()) +
                                           " rows, need " + std::to_string(opt.k_sim + opt.k_div + 1), f);
    }
    std::vector<std::string> rows;
    std::set<std::string> names;
    for (const auto& r : msa) {
      rows.push_back(r.sequence);
      names.insert(r.name);
    }
    auto ranked = hamming_rank(rows, 0);
    // The reference sorts first at distance 0 but duplicates may tie with it.
    ranked.erase(std::find_if(ranked.begin(), ranked.end(), [](const HammingEntry& e) { return e.index == 0; }));

    std::vector<const MsaRecord*> candidates;
    for (const auto& r : pool) {
      if (!names.count(r.name)) candidates.push_back(&r);
    }
    if (candidates.size() < opt.n_unrelated) {
      fail(ErrorCode::TooFewSequences, "unrelated pool has " + std::to_string(candidates.size()) +
                                           " sequences outside MSA " + std::to_string(f), f);
    }
    rng.shuffle(candidates);
    candidates.resize(opt.n_unrelated);

    const auto ref = embed(msa[0]);
    auto sims_of = [&](auto begin, auto end) {
      std::vector<double> s;
      for (auto it = begin; it != end; ++it) s.push_back(cosine_similarity(ref, embed(msa[it->index])));
      return s;
    };
    EvoReference e;
    e.name = msa[0].name;
    e.similar = group(sims_of(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(opt.k_sim)));
    e.divergent = group(sims_of(ranked.end() - static_cast<std::ptrdiff_t>(opt.k_div), ranked.end()));
    std::vector<double> unrel;
    for (const auto* r : candidates) unrel.push_back(cosine_similarity(ref, embed(*r)));
    e.unrelated = group(std::move(unrel));
    e.margin_sim_div = e.similar.median - e.divergent.median;
    e.margin_div_unrel = e.divergent.median - e.unrelated.median;
    e.margin_sim_unrel = e.similar.median - e.unrelated.median;
    e.gap_sim_unrel = *std::min_element(e.similar.similarities.begin(), e.similar.similarities.end()) -
                      *std::max_element(e.unrelated.similarities.begin(), e.unrelated.similarities.end());
    e.sim_vs_div = wilcoxon_rank_sum(e.similar.similarities, e.divergent.similarities, Alternative::greater);
    e.div_vs_unrel = wilcoxon_rank_sum(e.divergent.similarities, e.unrelated.similarities, Alternative::greater);
    e.sim_vs_unrel = wilcoxon_rank_sum(e.similar.similarities, e.unrelated.similarities, Alternative::greater);

    all_sim.insert(all_sim.end(), e.similar.similarities.begin(), e.similar.similarities.end());
    all_div.insert(all_div.end(), e.divergent.similarities.begin(), e.divergent.similarities.end());
    all_unrel.insert(all_unrel.end(), e.unrelated.similarities.begin(), e.unrelated.similarities.end());
    med_sim.push_back(e.similar.median);
    med_div.push_back(e.divergent.median);
    med_unrel.push_back(e.unrelated.median);
    report.references.push_back(std::move(e));
  }
  report.pooled_sim_vs_div = wilcoxon_rank_sum(all_sim, all_div, Alternative::greater);
  report.pooled_div_vs_unrel = wilcoxon_rank_sum(all_div, all_unrel, Alternative::greater);
  report.pooled_sim_vs_unrel = wilcoxon_rank_sum(all_sim, all_unrel, Alternative::greater);
  if (msas.size() >= 2) {
    report.paired_sim_vs_div = wilcoxon_signed_rank(med_sim, med_div, Alternative::greater);
    report.paired_div_vs_unrel = wilcoxon_signed_rank(med_div, med_unrel, Alternative::greater);
  }
  report.median_similar = median_of(all_sim);
  report.median_divergent = median_of(all_div);
  report.median_unrelated = median_of(all_unrel);
  return report;
}

nlohmann::json evo_json(const EvoReport& r) {
  nlohmann::json refs = nlohmann::json::array();
  for (const auto& e : r.references) {
    refs.push_back({{"reference", e.name},
                    {"median", {{"similar", e.similar.median}, {"divergent", e.divergent.median},
                                {"unrelated", e.unrelated.median}}},
                    {"mean", {{"similar", e.similar.mean}, {"divergent", e.divergent.mean},
                              {"unrelated", e.unrelated.mean}}},
                    {"margin", {{"similar_divergent", e.margin_sim_div},
                                {"divergent_unrelated", e.margin_div_unrel},
                                {"similar_unrelated", e.margin_sim_unrel},
                                {"min_similar_minus_max_unrelated", e.gap_sim_unrel}}},
                    {"tests", {{"similar_gt_divergent", test_json(e.sim_vs_div)},
                               {"divergent_gt_unrelated", test_json(e.div_vs_unrel)},
                               {"similar_gt_unrelated", test_json(e.sim_vs_unrel)}}}});
  }
  nlohmann::json pooled = {{"median", {{"similar", r.median_similar}, {"divergent", r.median_divergent},
                                       {"unrelated", r.median_unrelated}}},
                           {"similar_gt_divergent", test_json(r.pooled_sim_vs_div)},
                           {"divergent_gt_unrelated", test_json(r.pooled_div_vs_unrel)},
                           {"similar_gt_unrelated", test_json(r.pooled_sim_vs_unrel)}};
  if (r.paired_sim_vs_div) {
    pooled["paired_similar_gt_divergent"] = test_json(*r.paired_sim_vs_div);
    pooled["paired_divergent_gt_unrelated"] = test_json(*r.paired_div_vs_unrel);
  }
  return {{"references", refs}, {"pooled", pooled}};
}

std::string evo_csv(const EvoReport& r) {
  std::string out = "reference,group,similarity\n";
  char buf[32];
  auto dump = [&](const std::string& ref, const char* g, const std::vector<double>& v) {
    for (double s : v) {
      std::snprintf(buf, sizeof buf, "%.9g", s);
      out += ref + "," + g + "," + buf + "\n";
    }
  };
  for (const auto& e : r.references) {
    dump(e.name, "similar", e.similar.similarities);
    dump(e.name, "divergent", e.divergent.similarities);
    dump(e.name, "unrelated", e.unrelated.similarities);
  }
  return out;
}

std::vector<LabeledPair> read_pair_list(const std::filesystem::path& path) {
  std::vector<LabeledPair> out;
  std::size_t line_no = 0;
  const std::string text = binio::read_file(path);
  for (auto line : data_lines(text)) {
    auto f = split_tsv(line);
    if (f.size() < 3) fail(ErrorCode::ParseError, "pair row needs id_a<TAB>id_b<TAB>label", line_no);
    if (f[2] != "0" && f[2] != "1") fail(ErrorCode::BadLabel, "pair label must be 0 or 1", line_no);
    out.push_back({std::string(f[0]), std::string(f[1]), static_cast<std::uint8_t>(f[2] == "1")});
    ++line_no;
  }
  return out;
}

PairAuc roc_auc_pairs(const std::vector<LabeledPair>& pairs, const EmbeddingSet& emb) {
  PairAuc out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto ra = emb.find(pairs[i].a), rb = emb.find(pairs[i].b);
    if (!ra) fail(ErrorCode::MissingId, pairs[i].a, i);
    if (!rb) fail(ErrorCode::MissingId, pairs[i].b, i);
    auto a = emb.row(*ra), b = emb.row(*rb);
    const std::vector<double> va(a.begin(), a.end()), vb(b.begin(), b.end());
    out.scores.push_back(cosine_similarity(va, vb));
    out.labels.push_back(pairs[i].label);
  }
  out.auc = roc_auc(out.scores, out.labels);
  out.roc = roc_curve(out.scores, out.labels);
  return out;
}

}  // namespace onealign
