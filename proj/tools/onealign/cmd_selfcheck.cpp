// selfcheck: fast built-in comparison against brute-force references.

#include <cmath>
#include <cstdio>
#include <functional>

#include "common.hpp"
#include "onealign/checkpoint.hpp"
#include "onealign/contrastive.hpp"
#include "onealign/embstore.hpp"
#include "onealign/gradcheck.hpp"
#include "onealign/heads.hpp"
#include "onealign/metrics.hpp"
#include "onealign/retrieval.hpp"
#include "onealign/rng.hpp"
#include "onealign/stats.hpp"
#include "onealign/trainer.hpp"
#include "oracles.hpp"

namespace onealign::cli {
namespace {

oracle::Grid to_grid(const Matrix& m) {
  oracle::Grid g(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) g[i].assign(m.row(i).begin(), m.row(i).end());
  return g;
}

Matrix unit_rows(std::size_t n, std::size_t d, Rng& rng) {
  Matrix m(n, d);
  for (auto& v : m.data()) v = rng.normal();
  return normalize_rows(m, 0.0);
}

HeadInput token_input(std::size_t n, std::size_t c, Rng& rng) {
  HeadInput in;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = 3 + rng.below(4);
    Matrix x(len, c);
    for (auto& v : x.data()) v = rng.normal();
    std::vector<std::uint8_t> mask(len, 1);
    for (std::size_t t = 1; t < len; ++t) mask[t] = rng.bernoulli(0.7);
    in.tokens.push_back(std::move(x));
    in.masks.push_back(std::move(mask));
  }
  return in;
}

double grad_case(const HeadSpec& spec, Rng& rng) {
  const std::size_t n = 4, l = 8;
  HeadSpec anchor{"anchor", PoolerKind::none, ProjectionKind::linear, 5};
  ProjectionHead a(anchor, l), b(spec, l);
  a.init(rng);
  b.init(rng);
  for (Param* p : b.params()) {
    bool zero = true;
    for (double v : p->value) zero = zero && v == 0.0;
    if (zero && p->trainable) fill_normal(p->value, rng, 0.1);
  }
  HeadInput ia;
  ia.pooled = Matrix(n, 5);
  for (auto& v : ia.pooled.data()) v = rng.normal();
  HeadInput ib;
  if (spec.pooler == PoolerKind::none) {
    ib.pooled = Matrix(n, spec.input_dim);
    for (auto& v : ib.pooled.data()) v = rng.normal();
  } else {
    ib = token_input(n, spec.input_dim, rng);
  }
  return head_pair_grad_check(a, ia, b, ib, 1.0).max_rel_error;
}

struct Checker {
  int failures = 0;
  void check(const char* name, bool ok, double detail) {
    std::printf("%-5s %-28s %.3g\n", ok ? "ok" : "FAIL", name, detail);
    failures += !ok;
  }
};

void run_selfcheck(Checker& c, std::uint64_t seed) {
  Rng rng(seed);

  {
    std::vector<HeadSpec> specs(4);
    specs[0] = {"lin", PoolerKind::none, ProjectionKind::linear, 6};
    specs[1] = {"mlp", PoolerKind::none, ProjectionKind::mlp, 6};
    specs[1].mlp_hidden = {7};
    specs[2] = {"attn", PoolerKind::attention, ProjectionKind::linear, 4};
    specs[2].conv_channels = 5;
    specs[3] = {"lora", PoolerKind::cls, ProjectionKind::mlp, 6};
    specs[3].lora_rank = 2;
    specs[3].mlp_hidden = {5};
    double worst = 0.0;
    for (const auto& s : specs) worst = std::max(worst, grad_case(s, rng));
    c.check("head gradients", worst < 1e-4, worst);
  }

  {
    Matrix one(1, 3, 0.0);
    one(0, 0) = 1.0;
    Matrix eye(2, 2, 0.0);
    eye(0, 0) = eye(1, 1) = 1.0;
    const double want = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    const double err = std::abs(info_nce(eye, eye, 1.0) - want) + std::abs(info_nce(one, one, 1.0));
    double worst = err;
    for (int t = 0; t < 10; ++t) {
      const Matrix a = unit_rows(6, 4, rng), b = unit_rows(6, 4, rng);
      const double tau = 0.1 + rng.uniform();
      worst = std::max(worst, std::abs(symmetric_loss(a, b, tau) - oracle::symmetric_loss(to_grid(a), to_grid(b), tau)));
    }
    c.check("infonce", worst < 1e-9, worst);
  }

  {
    bool ok = true;
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const std::size_t n = 2 + rng.below(20);
      Matrix s(n, n);
      for (auto& v : s.data()) v = static_cast<double>(rng.below(5));
      const auto g = to_grid(s);
      for (std::size_t k : {std::size_t{1}, std::size_t{2}, n}) ok = ok && recall_at_k(s, k) == oracle::recall_at_k(g, k);
      ok = ok && median_rank(s) == oracle::median_rank(g);

      std::vector<double> x(n), y(n), sc(n);
      std::vector<std::uint8_t> lab(n);
      std::vector<int> ilab(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<double>(rng.below(6));
        y[i] = rng.normal();
        sc[i] = static_cast<double>(rng.below(4));
        lab[i] = static_cast<std::uint8_t>(i % 2);
        ilab[i] = lab[i];
      }
      if (oracle::midranks(x) != std::vector<double>(n, (n + 1) / 2.0)) {
        worst = std::max(worst, std::abs(spearman_rho(x, y) - oracle::spearman_rho(x, y)));
      }
      worst = std::max(worst, std::abs(roc_auc(sc, lab) - oracle::roc_auc(sc, ilab)));

      Matrix ms(n, 3), ml(n, 3);
      for (auto& v : ms.data()) v = static_cast<double>(rng.below(11)) / 10.0;
      for (auto& v : ml.data()) v = static_cast<double>(rng.bernoulli(0.4));
      ml(0, 0) = 1.0;
      worst = std::max(worst, std::abs(fmax(ms, ml).fmax - oracle::fmax(to_grid(ms), to_grid(ml))));
      const auto ap = aupr_per_class(ms, ml);
      const auto ap_ref = oracle::aupr_per_class(to_grid(ms), to_grid(ml));
      for (std::size_t k = 0; k < ap.size(); ++k) {
        ok = ok && ap[k].has_value() == ap_ref[k].has_value();
        if (ap[k] && ap_ref[k]) worst = std::max(worst, std::abs(*ap[k] - *ap_ref[k]));
      }
    }
    c.check("metrics", ok && worst < 1e-12, worst);
  }

  {
    const std::vector<double> x{4, 5, 6}, y{1, 2, 3};
    bool ok = wilcoxon_rank_sum(x, y, Alternative::greater).p_value == 0.05;
    for (int t = 0; t < 20; ++t) {
      std::vector<double> a(1 + rng.below(6)), b(1 + rng.below(6));
      for (auto& v : a) v = static_cast<double>(rng.below(8));
      for (auto& v : b) v = static_cast<double>(rng.below(8));
      ok = ok && wilcoxon_rank_sum(a, b, Alternative::two_sided, TestMethod::exact).p_value ==
                     oracle::rank_sum_exact_p(a, b, oracle::Tail::two_sided);
    }
    c.check("wilcoxon exact", ok, 0.0);
  }

  {
    std::vector<std::string> ids{"a", "b", "c"};
    std::vector<float> data{1, 2, 3, 4, 5, 6};
    const EmbeddingSet set({"m", false}, ids, 2, data);
    const std::string bytes = encode_emb1(set);
    bool ok = encode_emb1(decode_emb1(bytes, {"m", false})) == bytes;
    const TokenEmbeddingSet tok({"t", false}, {"x", "y"}, 1, {0, 2, 3}, {1, 2, 3}, {1, 0, 1});
    const std::string tbytes = encode_embt(tok);
    ok = ok && encode_embt(decode_embt(tbytes, {"t", false})) == tbytes;
    AlignConfig cfg;
    cfg.shared_dim = 4;
    cfg.heads = {{"m", PoolerKind::none, ProjectionKind::linear, 2}, {"t", PoolerKind::mean, ProjectionKind::linear, 1}};
    const TrainState st = init_train_state(cfg);
    const std::string cbytes = encode_checkpoint(cfg, st);
    const Checkpoint back = decode_checkpoint(cbytes);
    ok = ok && encode_checkpoint(back.config, back.state) == cbytes;
    c.check("format round-trip", ok, 0.0);
  }
}

}  // namespace

void register_selfcheck(CLI::App& app, Globals& g) {
  auto* sc = app.add_subcommand("selfcheck", "Run the built-in reference checks");
  sc->callback([&g] {
    Checker c;
    run_selfcheck(c, g.seed.value_or(0));
    if (c.failures) throw CLI::RuntimeError(1);
  });
}

}  // namespace onealign::cli
