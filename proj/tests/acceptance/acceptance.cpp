// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "gen.hpp"
#include "onealign/binio.hpp"
#include "onealign/checkpoint.hpp"
#include "onealign/contrastive.hpp"
#include "onealign/error.hpp"
#include "onealign/evo.hpp"
#include "onealign/gradcheck.hpp"
#include "onealign/metrics.hpp"
#include "onealign/probe.hpp"
#include "onealign/retrieval.hpp"
#include "onealign/stats.hpp"
#include "onealign/synth.hpp"
#include "onealign/trainer.hpp"
#include "oracles.hpp"

using namespace onealign;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + ONEALIGN_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

// 1 -------------------------------------------------------------------------

Outcome gradient_fidelity() {
  Rng rng(20240601);
  std::vector<HeadSpec> specs;
  specs.push_back({"lin", PoolerKind::none, ProjectionKind::linear, 6});
  HeadSpec mlp{"mlp", PoolerKind::none, ProjectionKind::mlp, 6};
  mlp.mlp_hidden = {12};
  specs.push_back(mlp);
  HeadSpec attn{"attn", PoolerKind::attention, ProjectionKind::linear, 5};
  attn.conv_channels = 6;
  specs.push_back(attn);
  HeadSpec lora{"lora", PoolerKind::cls, ProjectionKind::mlp, 6};
  lora.lora_rank = 2;
  lora.mlp_hidden = {10};
  specs.push_back(lora);
  HeadSpec lora_lin{"lora_lin", PoolerKind::none, ProjectionKind::linear, 6};
  lora_lin.lora_rank = 3;
  specs.push_back(lora_lin);

  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const HeadSpec& spec = specs[static_cast<std::size_t>(i) % specs.size()];
    const std::size_t n = (i / 5) % 2 ? 8 : 2;
    const std::size_t l = (i / 10) % 2 ? 32 : 4;
    // Other side cycles through the head types as well.
    const HeadSpec& other = specs[static_cast<std::size_t>(i + 1 + i / 20) % specs.size()];
    ProjectionHead a(spec, l), b(other, l);
    gen::init_dense(a, rng);
    gen::init_dense(b, rng);
    const HeadInput ia = gen::head_input(spec, n, rng), ib = gen::head_input(other, n, rng);
    const double tau = i % 3 == 0 ? 0.5 : 1.0;
    worst = std::max(worst, head_pair_grad_check(a, ia, b, ib, tau).max_rel_error);
  }
  return {worst < 1e-4, fmt("max relative error %.3g over 100 instances", worst)};
}

// 2 -------------------------------------------------------------------------

struct Prepared {
  SynthData data;
  Workspace ws;
  PairedDataset split;
  PairedDataset test;
};

Prepared prepare(const SynthConfig& sc, const AlignConfig& cfg) {
  Prepared p;
  p.data = generate(sc);
  p.ws.modalities = p.data.modalities;
  p.split = split_by_cluster(build_paired_dataset(p.data.manifest, p.ws, false), p.data.clusters, cfg.fractions,
                             cfg.split_seed);
  p.test = p.split;
  std::erase_if(p.test.pairs, [](const Pair& x) { return x.split != Split::test; });
  return p;
}

Outcome random_baseline() {
  SynthConfig sc = synth_preset("baseline");
  sc.seed = 0;
  AlignConfig cfg;
  cfg.fractions = {0.05, 0.05, 0.9};
  Prepared p = prepare(sc, cfg);
  complete_head_specs(cfg, p.ws);
  Checkpoint ck{cfg, init_train_state(cfg)};
  const auto clusters = train_clusters_of(p.split);
  const auto report = evaluate_alignment(ck, p.ws, p.test, {4000, 0}, &clusters);
  bool ok = !report.tasks.empty();
  std::string detail;
  for (const auto& t : report.tasks) {
    ok = ok && t.metrics.n == 4000 && t.metrics.mr >= 1800 && t.metrics.mr <= 2200;
    detail += fmt("%s N=%zu MR=%zu; ", t.task.key().c_str(), t.metrics.n, t.metrics.mr);
  }
  return {ok, detail};
}

// 3 -------------------------------------------------------------------------

Outcome emergence() {
  SynthConfig sc = synth_preset("emergence");
  sc.seed = 1;
  AlignConfig cfg;
  cfg.seed = 7;
  cfg.split_seed = 7;
  cfg.shared_dim = 128;
  cfg.steps = 2000;
  Prepared p = prepare(sc, cfg);
  complete_head_specs(cfg, p.ws);
  const auto clusters = train_clusters_of(p.split);

  Checkpoint untrained{cfg, init_train_state(cfg)};
  const auto random = evaluate_alignment(untrained, p.ws, p.test, {4000, 0}, &clusters);

  Checkpoint ck{cfg, init_train_state(cfg)};
  train(cfg, ck.state, p.ws, collect_train_pairs(p.split, p.ws));
  const auto aligned = evaluate_alignment(ck, p.ws, p.test, {4000, 0}, &clusters);

  std::size_t trained_max = 0, emergent_max = 0, emergent_min = SIZE_MAX, random_min = SIZE_MAX;
  bool within = true;
  for (const auto& t : aligned.tasks) {
    if (t.task.kind == TaskKind::trained) {
      trained_max = std::max(trained_max, t.metrics.mr);
      within = within && t.metrics.mr <= 10;
    } else {
      emergent_max = std::max(emergent_max, t.metrics.mr);
      emergent_min = std::min(emergent_min, t.metrics.mr);
      within = within && t.metrics.mr * 20 <= t.metrics.n;
    }
  }
  for (const auto& t : random.tasks) random_min = std::min(random_min, t.metrics.mr);
  const bool ordered = trained_max < emergent_min && emergent_max < random_min;
  return {within && ordered && aligned.tasks.size() == 12,
          fmt("N=%zu trained MR<=%zu emergent MR %zu..%zu random MR>=%zu",
              aligned.tasks.empty() ? std::size_t{0} : aligned.tasks[0].metrics.n, trained_max, emergent_min,
              emergent_max, random_min)};
}

// 4 -------------------------------------------------------------------------

Outcome task_enumeration() {
  std::vector<ModalityId> mods{{"seq", true}, {"struct_graph", false}, {"pocket", false}, {"text", false},
                               {"go", false}};
  std::size_t trained = 0, emergent = 0;
  for (const auto& t : enumerate_tasks(mods)) (t.kind == TaskKind::trained ? trained : emergent)++;
  return {trained == 8 && emergent == 12, fmt("%zu trained + %zu emergent", trained, emergent)};
}

// 5 -------------------------------------------------------------------------

Outcome metric_oracles() {
  Rng rng(5);
  std::size_t mismatches = 0;
  double worst = 0.0;
  auto real = [&](double got, double want) {
    const double d = std::abs(got - want);
    worst = std::max(worst, d);
    mismatches += !(d <= 1e-12);
  };
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(49);
    const Matrix s = t % 2 ? gen::tied_matrix(n, n, rng, 3) : gen::normal_matrix(n, n, rng);
    const auto g = gen::grid(s);
    const std::size_t k = 1 + rng.below(n);
    mismatches += recall_at_k(s, k) != oracle::recall_at_k(g, k);
    mismatches += median_rank(s) != oracle::median_rank(g);

    const auto x = gen::values(n, rng, t % 2 ? 5 : 0), y = gen::values(n, rng, t % 3 ? 0 : 4);
    if (oracle::midranks(x) != std::vector<double>(n, (n + 1) / 2.0) &&
        oracle::midranks(y) != std::vector<double>(n, (n + 1) / 2.0)) {
      real(spearman_rho(x, y), oracle::spearman_rho(x, y));
    }

    std::vector<int> labels(n);
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = static_cast<std::uint8_t>(labels[i] = i < 2 ? int(i) : int(rng.below(2)));
    real(roc_auc(x, bits), oracle::roc_auc(x, labels));

    const std::size_t rows = 1 + rng.below(50), cols = 1 + rng.below(6);
    Matrix lab = gen::tied_matrix(rows, cols, rng, 2), sc(rows, cols);
    lab(0, 0) = 1.0;
    for (auto& v : sc.data()) v = t % 2 ? static_cast<double>(rng.below(101)) / 100.0 : rng.uniform();
    real(fmax(sc, lab).fmax, oracle::fmax(gen::grid(sc), gen::grid(lab)));
    const auto got = aupr_per_class(sc, lab);
    const auto want = oracle::aupr_per_class(gen::grid(sc), gen::grid(lab));
    for (std::size_t c = 0; c < cols; ++c) {
      if (got[c].has_value() != want[c].has_value()) {
        ++mismatches;
      } else if (got[c]) {
        real(*got[c], *want[c]);
      }
    }
  }
  return {mismatches == 0, fmt("%zu mismatches, max real deviation %.3g", mismatches, worst)};
}

// 6 -------------------------------------------------------------------------

Outcome wilcoxon_exactness() {
  Rng rng(6);
  std::size_t compared = 0, mismatches = 0;
  const std::pair<Alternative, oracle::Tail> tails[] = {{Alternative::greater, oracle::Tail::greater},
                                                        {Alternative::less, oracle::Tail::less},
                                                        {Alternative::two_sided, oracle::Tail::two_sided}};
  for (std::size_t n = 1; n <= 8; ++n) {
    for (std::size_t m = 1; m <= 8; ++m) {
      for (int s = 0; s < 50; ++s) {
        const std::uint64_t levels = s % 2 ? 2 + rng.below(5) : 0;
        const auto x = gen::values(n, rng, levels), y = gen::values(m, rng, levels);
        for (const auto& [alt, tail] : tails) {
          ++compared;
          mismatches +=
              wilcoxon_rank_sum(x, y, alt, TestMethod::exact).p_value != oracle::rank_sum_exact_p(x, y, tail);
        }
      }
    }
  }
  const double worked =
      wilcoxon_rank_sum(std::vector<double>{4, 5, 6}, std::vector<double>{1, 2, 3}, Alternative::greater).p_value;
  return {mismatches == 0 && worked == 0.05,
          fmt("%zu/%zu exact p-values identical; worked case p=%.17g", compared - mismatches, compared, worked)};
}

// 7 -------------------------------------------------------------------------

Outcome infonce_anchors() {
  Rng rng(7);
  const Matrix one = gen::unit_rows(1, 4, rng);
  const double l1 = info_nce(one, one, 1.0);
  Matrix eye(2, 2, 0.0);
  eye(0, 0) = eye(1, 1) = 1.0;
  const double l2 = info_nce(eye, eye, 1.0);
  const double want2 = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
  double worst256 = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Matrix a = gen::unit_rows(256, 64, rng), b = gen::unit_rows(256, 64, rng);
    worst256 = std::max(worst256, std::abs(info_nce(a, b, 1.0) - std::log(256.0)));
  }
  const bool ok = std::abs(l1) <= 1e-12 && std::abs(l2 - want2) <= 1e-9 && worst256 <= 0.2;
  return {ok, fmt("n=1 %.3g; n=2 %.12f vs %.12f; |L256 - ln256| <= %.3f", l1, l2, want2, worst256)};
}

// 8 -------------------------------------------------------------------------

Outcome determinism() {
  gen::TempDir dir("acc_det");
  const auto d = dir.path();
  if (run_cli("--seed 3 --out " + q(d / "data") + " synth --preset small") != 0) return {false, "synth failed"};
  binio::write_file(d / "align.json", R"({"steps": 40, "shared_dim": 32, "batch_size": 16})");
  if (run_cli("--seed 3 --out " + q(d / "probe_data") + " synth --kind probe --task separable --n 300 --dim 8") != 0) {
    return {false, "probe synth failed"};
  }
  binio::write_file(d / "probe.json", R"({"hidden": [32], "max_epochs": 10, "lr": 0.01})");
  for (const char* tag : {"a", "b"}) {
    const std::string t = tag;
    if (run_cli("--seed 11 --config " + q(d / "align.json") + " --out " + q(d / ("train_" + t)) +
                " align-train --workspace " + q(d / "data" / "workspace.json")) != 0) {
      return {false, "align-train failed"};
    }
    if (run_cli("--seed 11 --config " + q(d / "probe.json") + " --out " + q(d / ("probe_" + t)) + " probe --runs 2 --task " +
                q(d / "probe_data" / "task.json")) != 0) {
      return {false, "probe failed"};
    }
  }
  std::size_t same = 0, total = 0;
  for (const auto& rel : {std::filesystem::path("train_%/checkpoint.opc1"), std::filesystem::path("train_%/train_report.json"),
                          std::filesystem::path("train_%/loss.csv"), std::filesystem::path("probe_%/probe_report.json"),
                          std::filesystem::path("probe_%/probe.csv")}) {
    std::string ra = rel.string(), rb = rel.string();
    ra.replace(ra.find('%'), 1, "a");
    rb.replace(rb.find('%'), 1, "b");
    ++total;
    same += binio::read_file(d / ra) == binio::read_file(d / rb);
  }
  return {same == total, fmt("%zu/%zu artifacts byte-identical", same, total)};
}

// 9 -------------------------------------------------------------------------

std::string opc1_fixture(Rng& rng) {
  SynthConfig sc;
  sc.n_items = 40 + rng.below(40);
  sc.latent_dim = 4;
  sc.seed = rng.next_u64();
  sc.items_per_cluster = 5;
  SynthModality anchor{"seq", 3 + rng.below(4), 0.3, 1.0, true, rng.bernoulli(0.5)};
  sc.modalities = {anchor, {"text", 2 + rng.below(5), 0.3, 0.8}, {"pocket", 2 + rng.below(5), 0.3, 0.7}};
  const SynthData data = generate(sc);
  Workspace ws;
  ws.modalities = data.modalities;
  AlignConfig cfg;
  cfg.shared_dim = 2 + rng.below(8);
  cfg.batch_size = 4;
  cfg.steps = rng.below(4);
  cfg.seed = rng.next_u64();
  cfg.learnable_tau = rng.bernoulli(0.5);
  cfg.temperature = 0.5 + rng.uniform();
  complete_head_specs(cfg, ws);
  for (auto& h : cfg.heads) {
    h.conv_channels = 4;
    h.mlp_hidden = {5};
    if (h.pooler == PoolerKind::none && rng.bernoulli(0.3)) h.lora_rank = 1 + rng.below(2);
    if (h.pooler == PoolerKind::none && rng.bernoulli(0.3)) h.projection = ProjectionKind::mlp;
  }
  const auto split = split_by_cluster(build_paired_dataset(data.manifest, ws, false), data.clusters, cfg.fractions, 0);
  TrainState state = init_train_state(cfg);
  train(cfg, state, ws, collect_train_pairs(split, ws));
  return encode_checkpoint(cfg, state);
}

Outcome format_round_trip() {
  Rng rng(9);
  gen::TempDir dir("acc_fmt");
  std::size_t ok = 0;
  for (int i = 0; i < 50; ++i) {
    const auto pooled = gen::pooled_set("text", false, rng.below(30), 1 + rng.below(9), rng);
    const auto p1 = dir / "a.emb1";
    save_pooled_embeddings(p1, pooled);
    const std::string b1 = binio::read_file(p1);
    save_pooled_embeddings(dir / "b.emb1", load_pooled_embeddings(p1));
    const bool emb1 = b1 == binio::read_file(dir / "b.emb1") && b1 == encode_emb1(pooled);

    const auto tokens = gen::token_set("seq", true, rng.below(20), 1 + rng.below(6), rng);
    const auto t1 = dir / "a.embt";
    save_token_embeddings(t1, tokens);
    save_token_embeddings(dir / "b.embt", load_token_embeddings(t1));
    const bool embt = binio::read_file(t1) == binio::read_file(dir / "b.embt");

    const std::string c1 = opc1_fixture(rng);
    binio::write_file(dir / "a.opc1", c1);
    const Checkpoint ck = load_checkpoint(dir / "a.opc1");
    save_checkpoint(dir / "b.opc1", ck.config, ck.state);
    const bool opc1 = binio::read_file(dir / "b.opc1") == c1;
    ok += emb1 && embt && opc1;
  }
  return {ok == 50, fmt("%zu/50 fixtures byte-identical (EMB1, EMBT, OPC1)", ok)};
}

// 10 ------------------------------------------------------------------------

ProbeData probe_task(const std::filesystem::path& dir, const std::string& task, std::uint64_t seed) {
  if (run_cli("--seed " + std::to_string(seed) + " --out " + q(dir) + " synth --kind probe --task " + task +
              " --n 600 --dim 16") != 0) {
    fail(ErrorCode::InvalidArgument, "probe synth failed");
  }
  const auto emb = load_pooled_embeddings(dir / "embeddings.emb1");
  const auto labels = read_labels(dir / "labels.tsv", task, LabelKind::binary);
  return make_probe_data(emb, labels, read_split_file(dir / "splits.tsv"), ProbeMetric::accuracy);
}

Outcome probe_sanity() {
  gen::TempDir dir("acc_probe");
  const ProbeData sep = probe_task(dir / "sep", "separable", 0);
  const auto grid = sweep(sep, SweepGrid{}.points(), 1, 0, 0);
  const auto& best = grid.points[grid.best];

  double null_mean = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ProbeData null = probe_task(dir / ("null" + std::to_string(s)), "null", 100 + s);
    null_mean += train_probe(null, ProbeConfig{}, s).test_metric / 20.0;
  }

  // 2900*512 + 512 + 512 + 1 parameters fit; 2950 inputs do not.
  auto wide = [&](std::size_t dim) {
    Rng rng(dim);
    ProbeData d;
    d.kind = LabelKind::binary;
    d.metric = ProbeMetric::accuracy;
    d.x_train = gen::normal_matrix(8, dim, rng);
    d.x_val = gen::normal_matrix(4, dim, rng);
    d.x_test = gen::normal_matrix(4, dim, rng);
    d.y_train = Matrix(8, 1, 0.0);
    d.y_val = Matrix(4, 1, 0.0);
    d.y_test = Matrix(4, 1, 0.0);
    d.y_train(0, 0) = d.y_val(0, 0) = d.y_test(0, 0) = 1.0;
    return d;
  };
  ProbeConfig big;
  big.hidden = {512};
  big.max_epochs = 1;
  const std::size_t fits = train_probe(wide(2900), big, 0).parameters;
  bool rejected = false;
  try {
    train_probe(wide(2950), big, 0);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::ParamBudgetExceeded;
  }
  const bool ok = best.val_mean >= 0.99 && std::abs(null_mean - 0.5) <= 0.05 && fits <= kProbeParamBudget && rejected;
  return {ok, fmt("separable best val %.4f (config %zu of %zu); null mean test acc %.4f; %zu params accepted, "
                  "1511425 %s",
                  best.val_mean, best.config_id, grid.points.size(), null_mean, fits,
                  rejected ? "rejected" : "NOT rejected")};
}

// 11 ------------------------------------------------------------------------

Outcome evo_ordering() {
  MsaFamilyConfig fc;
  fc.seed = 11;
  const auto fam = generate_msa_families(fc);
  std::vector<MsaRecord> pool;
  for (const auto& m : fam.msas) pool.insert(pool.end(), m.begin(), m.end());
  EvoOptions opt;
  opt.seed = 11;
  const auto r = evo_relatedness_report(lookup_embedder(fam.embeddings), fam.msas, pool, opt);
  const bool ok = r.median_similar > r.median_divergent && r.median_divergent > r.median_unrelated &&
                  r.pooled_sim_vs_div.p_value < 1e-6 && r.pooled_div_vs_unrel.p_value < 1e-6;
  return {ok, fmt("medians %.3f > %.3f > %.3f; p(sim>div)=%.3g p(div>unrel)=%.3g", r.median_similar,
                  r.median_divergent, r.median_unrelated, r.pooled_sim_vs_div.p_value, r.pooled_div_vs_unrel.p_value)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient fidelity", gradient_fidelity},
      {"random-baseline median rank", random_baseline},
      {"alignment emergence", emergence},
      {"task enumeration", task_enumeration},
      {"metric oracle equivalence", metric_oracles},
      {"wilcoxon exactness", wilcoxon_exactness},
      {"infonce anchors", infonce_anchors},
      {"determinism", determinism},
      {"format round-trip", format_round_trip},
      {"probe sanity", probe_sanity},
      {"evo-relatedness ordering", evo_ordering},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %-30s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
