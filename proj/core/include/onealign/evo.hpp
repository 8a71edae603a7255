#pragma once

// Evolutionary-relatedness analysis of embeddings over MSAs, and pairwise
// binding-site ROC scoring.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "onealign/embstore.hpp"
#include "onealign/msa.hpp"
#include "onealign/stats.hpp"

namespace onealign {

using Embedder = std::function<std::vector<double>(const MsaRecord&)>;

/// Embeds by id lookup in a pooled set; unknown ids raise MissingId.
Embedder lookup_embedder(const EmbeddingSet& set);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct EvoGroupStats {
  std::vector<double> similarities;
  double median = 0.0;
  double mean = 0.0;
};

struct EvoReference {
  std::string name;
  EvoGroupStats similar, divergent, unrelated;
  /// Median differences between groups.
  double margin_sim_div = 0.0, margin_div_unrel = 0.0, margin_sim_unrel = 0.0;
  /// min(similar) - max(unrelated).
  double gap_sim_unrel = 0.0;
  WilcoxonResult sim_vs_div, div_vs_unrel, sim_vs_unrel;
};

struct EvoReport {
  std::vector<EvoReference> references;
  /// Pooled over references (unpaired, one-sided "greater").
  WilcoxonResult pooled_sim_vs_div, pooled_div_vs_unrel, pooled_sim_vs_unrel;
  /// Per-reference group medians compared pairwise (signed-rank, "greater").
  std::optional<WilcoxonResult> paired_sim_vs_div, paired_div_vs_unrel;
  double median_similar = 0.0, median_divergent = 0.0, median_unrelated = 0.0;
};

struct EvoOptions {
  std::size_t k_sim = 50;
  std::size_t k_div = 50;
  std::size_t n_unrelated = 1000;
  std::uint64_t seed = 0;
};

/// Per MSA, row 0 is the reference. Similar = the k_sim nearest other rows by
/// Hamming distance, divergent = the k_div farthest; unrelated = n_unrelated
/// draws without replacement from `pool` excluding names in that MSA.
/// Throws TooFewSequences.
EvoReport evo_relatedness_report(const Embedder& embed, const std::vector<std::vector<MsaRecord>>& msas,
                                 const std::vector<MsaRecord>& pool, const EvoOptions& options);

nlohmann::json evo_json(const EvoReport& report);
/// `reference,group,similarity` rows.
std::string evo_csv(const EvoReport& report);

struct LabeledPair {
  std::string a;
  std::string b;
  std::uint8_t label = 0;
};

/// TSV `id_a<TAB>id_b<TAB>label{0,1}`.
std::vector<LabeledPair> read_pair_list(const std::filesystem::path& path);

struct PairAuc {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  double auc = 0.0;
  std::vector<RocPoint> roc;
};

/// Cosine similarity per pair, then ROC-AUC. Throws SingleClass, MissingId.
PairAuc roc_auc_pairs(const std::vector<LabeledPair>& pairs, const EmbeddingSet& emb);

}  // namespace onealign
