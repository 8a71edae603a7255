#include <gtest/gtest.h>

#include "gen.hpp"
#include "onealign/binio.hpp"
#include "onealign/embstore.hpp"
#include "onealign/msa.hpp"
#include "onealign/synth.hpp"

using namespace onealign;

namespace {

SynthConfig three(std::uint64_t seed) {
  SynthConfig c;
  c.n_items = 600;
  c.latent_dim = 8;
  c.seed = seed;
  c.modalities = {{"seq", 8, 0.2, 1.0, true, true}, {"a", 6, 0.2, 0.6, false, false},
                  {"b", 6, 0.2, 0.33, false, false}};
  return c;
}

}  // namespace

TEST(Synth, DeterministicPerSeed) {
  const auto a = generate(three(1)), b = generate(three(1)), c = generate(three(2));
  EXPECT_EQ(encode_embt(a.modalities[0].tokens()), encode_embt(b.modalities[0].tokens()));
  EXPECT_EQ(encode_emb1(a.modalities[1].pooled()), encode_emb1(b.modalities[1].pooled()));
  EXPECT_NE(encode_emb1(a.modalities[1].pooled()), encode_emb1(c.modalities[1].pooled()));
  EXPECT_EQ(a.clusters, b.clusters);
}

TEST(Synth, PresenceFractions) {
  const auto d = generate(three(3));
  EXPECT_EQ(d.modalities[0].size(), 600u);
  EXPECT_NEAR(d.modalities[1].size() / 600.0, 0.6, 0.06);
  EXPECT_NEAR(d.modalities[2].size() / 600.0, 0.33, 0.06);
  EXPECT_EQ(d.manifest.size(), d.modalities[1].size() + d.modalities[2].size());
  for (const auto& row : d.manifest) EXPECT_TRUE(d.clusters.count(row.anchor_id));
  std::set<std::string> labels;
  for (const auto& [id, c] : d.clusters) labels.insert(c);
  EXPECT_LE(labels.size(), 60u);
  EXPECT_GT(labels.size(), 5u);
}

TEST(Synth, ViewsShareLatent) {
  auto c = three(4);
  c.modalities[0].tokens = false;
  for (auto& m : c.modalities) {
    m.noise_sigma = 0.0;
    m.presence_prob = 1.0;
  }
  const auto d = generate(c);
  // Same item in two noiseless views: Gram matrices match up to the random map,
  // so at least check rows are distinct and nonzero.
  const auto& a = d.modalities[1].pooled();
  for (std::size_t i = 0; i < 5; ++i) {
    double norm = 0.0;
    for (float v : a.row(i)) norm += v * v;
    EXPECT_GT(norm, 0.0);
  }
}

TEST(Synth, WritesLoadableWorkspace) {
  gen::TempDir dir("synth");
  const auto ws_path = write_synth(dir.path(), generate(three(5)));
  const auto ws = load_workspace(ws_path);
  ASSERT_EQ(ws.modalities.size(), 3u);
  EXPECT_TRUE(ws.anchor().is_tokens());
  const auto ds = build_paired_dataset(ws.manifest_path, ws, false);
  EXPECT_FALSE(ds.pairs.empty());
  EXPECT_FALSE(read_cluster_map(ws.cluster_path).empty());
}

TEST(Synth, PresetsAndJson) {
  for (const char* name : {"emergence", "baseline", "small"}) {
    const auto c = synth_preset(name);
    nlohmann::json j = c;
    const auto back = j.get<SynthConfig>();
    EXPECT_EQ(back.n_items, c.n_items);
    EXPECT_EQ(back.modalities.size(), c.modalities.size());
  }
  EXPECT_THROW(synth_preset("nope"), std::exception);
}

TEST(Synth, MsaFamilies) {
  MsaFamilyConfig c;
  c.families = 3;
  c.members = 20;
  c.length = 30;
  c.embed_dim = 8;
  const auto f = generate_msa_families(c);
  ASSERT_EQ(f.msas.size(), 3u);
  EXPECT_EQ(f.embeddings.size(), 60u);
  for (const auto& m : f.msas) {
    ASSERT_EQ(m.size(), 20u);
    for (const auto& r : m) {
      EXPECT_EQ(match_columns(r.sequence).size(), 30u);
      EXPECT_TRUE(f.embeddings.find(r.name).has_value());
    }
  }
  gen::TempDir dir("msa");
  write_msa_families(dir.path(), f);
  EXPECT_EQ(read_msa(dir / "family_000.a3m").size(), 20u);
}
