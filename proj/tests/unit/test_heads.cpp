#include <gtest/gtest.h>

#include "gen.hpp"
#include "onealign/error.hpp"
#include "onealign/gradcheck.hpp"
#include "onealign/heads.hpp"
#include "onealign/layers.hpp"

using namespace onealign;

TEST(HeadSpec, Defaults) {
  auto seq = default_head_spec("seq", true, 16);
  EXPECT_EQ(seq.pooler, PoolerKind::attention);
  EXPECT_EQ(seq.projection, ProjectionKind::linear);
  auto st = default_head_spec("struct_token", true, 16);
  EXPECT_EQ(st.pooler, PoolerKind::mean);
  auto text = default_head_spec("text", true, 16);
  EXPECT_EQ(text.pooler, PoolerKind::cls);
  EXPECT_EQ(text.projection, ProjectionKind::mlp);
  EXPECT_GT(text.lora_rank, 0u);
  auto pocket = default_head_spec("pocket", false, 16);
  EXPECT_EQ(pocket.pooler, PoolerKind::none);
  EXPECT_EQ(pocket.projection, ProjectionKind::linear);
}

TEST(HeadSpec, JsonRoundTrip) {
  HeadSpec s{"text", PoolerKind::cls, ProjectionKind::mlp, 12};
  s.lora_rank = 4;
  s.mlp_hidden = {9, 7};
  s.activation = Activation::relu;
  nlohmann::json j = s;
  const HeadSpec back = j.get<HeadSpec>();
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(ProjectionHead, ShapesAndInputChecks) {
  Rng rng(1);
  HeadSpec s{"seq", PoolerKind::attention, ProjectionKind::linear, 3};
  s.conv_channels = 5;
  ProjectionHead head(s, 7);
  head.init(rng);
  const auto in = gen::token_input(4, 3, rng);
  EXPECT_EQ(head.forward(in, Mode::eval, nullptr, nullptr).cols(), 7u);
  HeadInput pooled;
  pooled.pooled = gen::normal_matrix(2, 3, rng);
  EXPECT_THROW(head.forward(pooled, Mode::eval, nullptr, nullptr), Error);
}

TEST(ProjectionHead, ParamOrderIsStable) {
  HeadSpec s{"text", PoolerKind::cls, ProjectionKind::mlp, 6};
  s.lora_rank = 2;
  ProjectionHead a(s, 4), b(s, 4);
  const auto pa = a.params(), pb = b.params();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name, pb[i]->name);
    EXPECT_EQ(pa[i]->shape, pb[i]->shape);
  }
}

namespace {

std::vector<HeadSpec> every_head(std::size_t cin) {
  std::vector<HeadSpec> specs;
  specs.push_back({"lin", PoolerKind::none, ProjectionKind::linear, cin});
  specs.push_back({"mlp", PoolerKind::none, ProjectionKind::mlp, cin});
  specs.back().mlp_hidden = {6};
  specs.push_back({"conv", PoolerKind::attention, ProjectionKind::linear, cin});
  specs.back().conv_channels = 4;
  specs.push_back({"convmlp", PoolerKind::attention, ProjectionKind::mlp, cin});
  specs.back().conv_channels = 4;
  specs.back().mlp_hidden = {5};
  specs.push_back({"mean", PoolerKind::mean, ProjectionKind::linear, cin});
  specs.push_back({"lora", PoolerKind::cls, ProjectionKind::mlp, cin});
  specs.back().lora_rank = 2;
  specs.back().mlp_hidden = {5};
  specs.push_back({"loralin", PoolerKind::none, ProjectionKind::linear, cin});
  specs.back().lora_rank = 3;
  return specs;
}

}  // namespace

TEST(ProjectionHead, GradientsThroughInfoNce) {
  Rng rng(2);
  for (const auto& spec : every_head(4)) {
    for (std::size_t n : {2, 4}) {
      HeadSpec anchor{"anchor", PoolerKind::attention, ProjectionKind::linear, 3};
      anchor.conv_channels = 3;
      ProjectionHead a(anchor, 8), b(spec, 8);
      gen::init_dense(a, rng);
      gen::init_dense(b, rng);
      const auto ia = gen::head_input(anchor, n, rng);
      const auto ib = gen::head_input(spec, n, rng);
      const auto res = head_pair_grad_check(a, ia, b, ib, 1.0);
      EXPECT_LT(res.max_rel_error, 1e-4) << spec.modality << " n=" << n;
    }
  }
}

TEST(ProjectionHead, FrozenWeightsGetNoGradient) {
  Rng rng(3);
  HeadSpec s{"text", PoolerKind::none, ProjectionKind::linear, 5};
  s.lora_rank = 2;
  ProjectionHead head(s, 4);
  gen::init_dense(head, rng);
  HeadInput in;
  in.pooled = gen::normal_matrix(3, 5, rng);
  ProjectionHead::Cache cache;
  const Matrix out = head.forward(in, Mode::train, nullptr, &cache);
  zero_grads(head.params());
  head.backward(in, cache, gen::normal_matrix(out.rows(), out.cols(), rng));
  for (const Param* p : head.params()) {
    if (p->trainable) continue;
    for (double g : p->grad) EXPECT_EQ(g, 0.0) << p->name;
  }
}
