#include <benchmark/benchmark.h>

#include "onealign/contrastive.hpp"
#include "onealign/heads.hpp"
#include "onealign/retrieval.hpp"
#include "onealign/rng.hpp"
#include "onealign/stats.hpp"

using namespace onealign;

namespace {

Matrix unit(std::size_t n, std::size_t d, Rng& rng) {
  Matrix m(n, d);
  for (auto& v : m.data()) v = rng.normal();
  return normalize_rows(m, 0.0);
}

void BM_CosineSim(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix q = unit(n, 128, rng), g = unit(n, 128, rng);
  for (auto _ : state) benchmark::DoNotOptimize(cosine_sim_matrix(q, g, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_CosineSim)->Arg(256)->Arg(1024);

void BM_MedianRank(benchmark::State& state) {
  Rng rng(2);
  const Matrix q = unit(1000, 64, rng), g = unit(1000, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(score_retrieval(q, g, 1));
}
BENCHMARK(BM_MedianRank);

void BM_AttentionHeadForward(benchmark::State& state) {
  Rng rng(3);
  HeadSpec spec{"seq", PoolerKind::attention, ProjectionKind::linear, 64};
  ProjectionHead head(spec, 128);
  head.init(rng);
  HeadInput in;
  for (int i = 0; i < 32; ++i) {
    Matrix x(static_cast<std::size_t>(state.range(0)), 64);
    for (auto& v : x.data()) v = rng.normal();
    in.tokens.push_back(std::move(x));
    in.masks.emplace_back(static_cast<std::size_t>(state.range(0)), 1);
  }
  for (auto _ : state) benchmark::DoNotOptimize(head.forward(in, Mode::eval, nullptr, nullptr));
}
BENCHMARK(BM_AttentionHeadForward)->Arg(16)->Arg(64);

void BM_InfoNceGrad(benchmark::State& state) {
  Rng rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  Matrix a(n, 512), b(n, 512);
  for (auto& v : a.data()) v = rng.normal();
  for (auto& v : b.data()) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(info_nce_grad(a, b, 1.0));
}
BENCHMARK(BM_InfoNceGrad)->Arg(32)->Arg(256);

void BM_ExactRankSum(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> x(8), y(8);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(wilcoxon_rank_sum(x, y, Alternative::two_sided, TestMethod::exact));
}
BENCHMARK(BM_ExactRankSum);

}  // namespace
BENCHMARK_MAIN();
