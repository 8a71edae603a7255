#pragma once

// Seeded synthetic workloads: linear-Gaussian multi-modality embedding sets
// with a shared latent, and MSA families with phylogeny-like embeddings.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "onealign/embstore.hpp"
#include "onealign/msa.hpp"

namespace onealign {

struct SynthModality {
  std::string name;
  std::size_t dim = 64;
  double noise_sigma = 0.3;
  double presence_prob = 1.0;
  bool anchor = false;
  /// Emit ragged token matrices instead of pooled vectors.
  bool tokens = false;
  std::size_t min_len = 4;
  std::size_t max_len = 12;
  std::size_t max_pad = 3;
  /// Per-token deviation from the item's view.
  double jitter = 0.5;
};

struct SynthConfig {
  std::size_t n_items = 1000;
  std::size_t latent_dim = 32;
  std::size_t items_per_cluster = 10;
  std::uint64_t seed = 0;
  std::vector<SynthModality> modalities;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

/// Named presets: "emergence" (anchor tokens + 3 pooled modalities, 10k
/// items), "baseline" (high-latent pair for untrained-head ranks), "small".
SynthConfig synth_preset(const std::string& name);

struct SynthData {
  std::vector<ModalityStore> modalities;
  std::vector<ManifestRow> manifest;
  std::map<std::string, std::string> clusters;
};

/// item i: z_i ~ N(0, I); view = M z_i + sigma eps with M_jk ~ N(0, 1/latent).
/// Items are dropped from a modality with probability 1 - presence (never
/// from the anchor). Clusters bucket items by the nearest of
/// n_items / items_per_cluster random centroids in the first two latent
/// coordinates.
SynthData generate(const SynthConfig& config);

/// Writes <name>.emb1/.embt, manifest.tsv, clusters.tsv and workspace.json.
/// Returns the workspace.json path.
std::filesystem::path write_synth(const std::filesystem::path& dir, const SynthData& data);

struct MsaFamilyConfig {
  std::size_t families = 8;
  std::size_t members = 160;
  std::size_t length = 120;
  std::size_t embed_dim = 64;
  /// Substitutions per tree edge are drawn from [1, max_step].
  std::size_t max_step = 6;
  /// Latent drift per substitution.
  double drift = 0.25;
  std::uint64_t seed = 0;
};

struct MsaFamilies {
  std::vector<std::vector<MsaRecord>> msas;  // row 0 is the family root
  EmbeddingSet embeddings;
};

/// Each family grows a random tree from a root sequence: a child copies a
/// random earlier member and applies substitutions; its latent moves by
/// drift * sqrt(substitutions) * N(0, I). Embeddings are the latents.
MsaFamilies generate_msa_families(const MsaFamilyConfig& config);

/// Writes family_XXX.a3m files plus sequences.emb1.
void write_msa_families(const std::filesystem::path& dir, const MsaFamilies& fam);

}  // namespace onealign
