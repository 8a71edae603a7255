#include <gtest/gtest.h>

#include "gen.hpp"
#include "onealign/binio.hpp"
#include "onealign/error.hpp"
#include "onealign/evo.hpp"
#include "onealign/msa.hpp"
#include "onealign/synth.hpp"

using namespace onealign;

TEST(Fasta, ParsesHeadersAndWrappedLines) {
  const auto recs = parse_fasta("# comment\n>a desc here\nAC\nGT\n\n>b\nac-.D\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].name, "a");
  EXPECT_EQ(recs[0].sequence, "ACGT");
  EXPECT_EQ(recs[1].sequence, "ac-.D");
  EXPECT_THROW(parse_fasta("ACGT\n>a\nA\n"), Error);
}

TEST(Msa, MatchColumns) {
  EXPECT_EQ(match_columns("AcD.-e"), "AD-");
  EXPECT_EQ(match_columns("acg"), "");
}

TEST(Msa, HammingMatchesLoop) {
  Rng rng(1);
  const std::string alphabet = "ACDE-";
  for (int t = 0; t < 50; ++t) {
    const std::size_t rows = 1 + rng.below(12), len = 1 + rng.below(20);
    std::vector<std::string> msa(rows);
    for (auto& r : msa) {
      for (std::size_t c = 0; c < len; ++c) {
        r += alphabet[rng.below(5)];
        if (rng.bernoulli(0.1)) r += 'k';  // insertion, ignored
      }
    }
    const std::size_t ref = rng.below(rows);
    const auto ranked = hamming_rank(msa, ref);
    ASSERT_EQ(ranked.size(), rows);
    std::vector<std::size_t> dist(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      const auto a = match_columns(msa[i]), b = match_columns(msa[ref]);
      for (std::size_t c = 0; c < len; ++c) dist[i] += a[c] != b[c];
    }
    for (std::size_t k = 0; k < rows; ++k) {
      EXPECT_EQ(ranked[k].distance, dist[ranked[k].index]);
      if (k > 0) {
        EXPECT_LE(ranked[k - 1].distance, ranked[k].distance);
        if (ranked[k - 1].distance == ranked[k].distance) {
          EXPECT_LT(ranked[k - 1].index, ranked[k].index);
        }
      }
    }
  }
}

TEST(Msa, RaggedRejected) {
  try {
    hamming_rank({"ACD", "AC"}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RaggedAlignment);
  }
}

TEST(Evo, SyntheticFamiliesOrdered) {
  MsaFamilyConfig fc;
  fc.families = 4;
  fc.members = 60;
  fc.length = 80;
  fc.embed_dim = 32;
  fc.seed = 3;
  const auto fam = generate_msa_families(fc);
  ASSERT_EQ(fam.msas.size(), 4u);
  std::vector<MsaRecord> pool;
  for (const auto& m : fam.msas) pool.insert(pool.end(), m.begin(), m.end());
  EvoOptions opt;
  opt.k_sim = 10;
  opt.k_div = 10;
  opt.n_unrelated = 50;
  const auto report = evo_relatedness_report(lookup_embedder(fam.embeddings), fam.msas, pool, opt);
  ASSERT_EQ(report.references.size(), 4u);
  for (const auto& r : report.references) {
    EXPECT_EQ(r.similar.similarities.size(), 10u);
    EXPECT_EQ(r.unrelated.similarities.size(), 50u);
    EXPECT_GT(r.margin_sim_div, 0.0) << r.name;
    EXPECT_GT(r.margin_div_unrel, 0.0) << r.name;
  }
  EXPECT_LT(report.pooled_sim_vs_div.p_value, 1e-3);
  EXPECT_LT(report.pooled_div_vs_unrel.p_value, 1e-6);
  const auto j = evo_json(report);
  EXPECT_EQ(j["references"].size(), 4u);
  EXPECT_EQ(evo_csv(report).rfind("reference,group,similarity\n", 0), 0u);

  opt.n_unrelated = pool.size();
  EXPECT_THROW(evo_relatedness_report(lookup_embedder(fam.embeddings), fam.msas, pool, opt), Error);
}

TEST(Evo, TooFewSequences) {
  const std::vector<std::vector<MsaRecord>> msas{{{"a", "AC"}}};
  EmbeddingSet emb({"seq", false}, {"a"}, 2, {1.0f, 0.0f});
  try {
    evo_relatedness_report(lookup_embedder(emb), msas, msas[0], {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewSequences);
  }
}

TEST(PairAuc, ReadsAndScores) {
  gen::TempDir dir("pairs");
  binio::write_file(dir / "p.tsv", "# a b label\na\tb\t1\na\tc\t0\n");
  const auto pairs = read_pair_list(dir / "p.tsv");
  ASSERT_EQ(pairs.size(), 2u);
  EmbeddingSet emb({"pocket", false}, {"a", "b", "c"}, 2, {1, 0, 1, 0.1f, -1, 0});
  const auto r = roc_auc_pairs(pairs, emb);
  EXPECT_EQ(r.auc, 1.0);
  binio::write_file(dir / "bad.tsv", "a\tb\t2\n");
  try {
    read_pair_list(dir / "bad.tsv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadLabel);
  }
  EXPECT_THROW(roc_auc_pairs({{"a", "zz", 1}, {"a", "b", 0}}, emb), Error);
}
