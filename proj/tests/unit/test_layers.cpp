#include <cmath>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "onealign/error.hpp"
#include "onealign/gradcheck.hpp"
#include "onealign/layers.hpp"
#include "onealign/lora.hpp"
#include "onealign/mlp.hpp"
#include "onealign/pooling.hpp"

using namespace onealign;

namespace {

double weighted_sum(const Matrix& y, const Matrix& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.data().size(); ++i) s += y.data()[i] * g.data()[i];
  return s;
}

double max_abs_error(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// Gradient of <g, f(params)> over the trainable params, analytic vs numeric.
// Relative error with the scale floored at `floor`: entries whose true
// gradient is exactly zero (bias before batchnorm, score bias under softmax)
// are then held to an absolute bound instead of amplified roundoff.
double mixed_error(std::span<const double> a, std::span<const double> b, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max({std::abs(a[i]), std::abs(b[i]), floor}));
  }
  return worst;
}

// Gradient of <g, f(params)> over the trainable params, analytic vs numeric.
// Absolute mode suits layers with gradients that are exactly zero.
double check_params(ParamList params, const std::function<Matrix()>& forward,
                    const std::function<void(const Matrix&)>& backward, const Matrix& g, bool absolute = false,
                    double h = 1e-3, double floor = 1e-8) {
  zero_grads(params);
  forward();
  backward(g);
  const auto analytic = flatten_grads(params);
  const auto start = flatten_values(params);
  auto f = [&](std::span<const double> flat) {
    assign_values(params, flat);
    return weighted_sum(forward(), g);
  };
  const auto numeric = central_difference5(f, start, h);
  const double err = absolute ? max_abs_error(analytic, numeric) : mixed_error(analytic, numeric, floor);
  assign_values(params, start);
  return err;
}

}  // namespace

TEST(Linear, BackwardOfUnitUpstream) {
  Rng rng(1);
  Linear lin("l", 3, 2);
  lin.init(rng);
  Matrix x = gen::normal_matrix(1, 3, rng);
  Matrix dy(1, 2, 0.0);
  dy(0, 1) = 1.0;
  lin.weight.zero_grad();
  lin.bias.zero_grad();
  lin.backward(x, dy);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(lin.weight.grad[0 * 3 + i], 0.0);
    EXPECT_EQ(lin.weight.grad[1 * 3 + i], x(0, i));
  }
  EXPECT_EQ(lin.bias.grad[0], 0.0);
  EXPECT_EQ(lin.bias.grad[1], 1.0);
}

TEST(Activation, ReluBlocksNegativeGradient) {
  Matrix pre(1, 2);
  pre(0, 0) = -1.0;
  pre(0, 1) = 2.0;
  const Matrix dx = activate_backward(pre, Matrix(1, 2, 1.0), Activation::relu);
  EXPECT_EQ(dx(0, 0), 0.0);
  EXPECT_EQ(dx(0, 1), 1.0);
}

TEST(Activation, GeluDerivativeMatchesNumeric) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const double x = 4.0 * rng.normal();
    Matrix pre(1, 1, x);
    const double analytic = activate_backward(pre, Matrix(1, 1, 1.0), Activation::gelu)(0, 0);
    auto f = [](std::span<const double> p) { return activate(Matrix(1, 1, p[0]), Activation::gelu)(0, 0); };
    std::vector<double> point{x};
    EXPECT_NEAR(analytic, central_difference5(f, point)[0], 1e-10) << x;
  }
}

TEST(MaskedConv, MatchesTripleLoop) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::size_t L = 5, cin = 2, cout = 1 + rng.below(3), K = 1 + 2 * rng.below(3);
    MaskedConv1d conv("c", cin, cout, K);
    conv.init(rng);
    const Matrix x = gen::normal_matrix(L, cin, rng);
    std::vector<std::uint8_t> mask(L);
    for (auto& m : mask) m = rng.bernoulli(0.7);
    const Matrix y = conv.forward(x, mask);
    const long half = static_cast<long>(K - 1) / 2;
    for (std::size_t tt = 0; tt < L; ++tt) {
      for (std::size_t j = 0; j < cout; ++j) {
        double want = 0.0;
        for (std::size_t i = 0; i < cin; ++i) {
          for (std::size_t k = 0; k < K; ++k) {
            const long src = static_cast<long>(tt + k) - half;
            if (src < 0 || src >= static_cast<long>(L)) continue;
            want += conv.weight.value[(j * cin + i) * K + k] * x(static_cast<std::size_t>(src), i) * mask[static_cast<std::size_t>(src)];
          }
        }
        EXPECT_NEAR(y(tt, j), want, 1e-12);
      }
    }
  }
}

TEST(MaskedConv, FullAndEmptyMasks) {
  Rng rng(4);
  MaskedConv1d conv("c", 3, 2, 3);
  conv.init(rng);
  const Matrix x = gen::normal_matrix(6, 3, rng);
  const std::vector<std::uint8_t> zeros(6, 0);
  const Matrix empty = conv.forward(x, zeros);
  for (double v : empty.data()) EXPECT_EQ(v, 0.0);
  // A zero row under a set mask bit is the same as a cleared bit.
  std::vector<std::uint8_t> ones(6, 1), holes{1, 0, 1, 1, 0, 1};
  Matrix xz = x;
  for (std::size_t c = 0; c < 3; ++c) xz(1, c) = xz(4, c) = 0.0;
  EXPECT_EQ(conv.forward(x, holes), conv.forward(xz, ones));
}

TEST(AttentionPool, MatchesExplicitSoftmax) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    AttentionPooler pool("a", 3, 4, 3);
    pool.init(rng);
    pool.score_b.value[0] = rng.normal();
    const std::size_t L = 1 + rng.below(6);
    const Matrix x = gen::normal_matrix(L, 3, rng);
    std::vector<std::uint8_t> mask(L);
    for (auto& m : mask) m = rng.bernoulli(0.6);
    mask[rng.below(L)] = 1;
    const auto pooled = pool.forward(x, mask, nullptr);
    const Matrix h = pool.conv.forward(x, mask);
    double z = 0.0;
    std::vector<double> e(L, 0.0);
    for (std::size_t i = 0; i < L; ++i) {
      if (!mask[i]) continue;
      double s = pool.score_b.value[0];
      for (std::size_t c = 0; c < 4; ++c) s += pool.score_w.value[c] * h(i, c);
      e[i] = std::exp(s);
      z += e[i];
    }
    for (std::size_t c = 0; c < 4; ++c) {
      double want = 0.0;
      for (std::size_t i = 0; i < L; ++i) want += e[i] / z * h(i, c);
      EXPECT_NEAR(pooled[c], want, 1e-12);
    }
  }
}

TEST(AttentionPool, SinglePositionAndUniformScores) {
  Rng rng(6);
  AttentionPooler pool("a", 2, 3, 3);
  pool.init(rng);
  const Matrix x1 = gen::normal_matrix(1, 2, rng);
  const std::vector<std::uint8_t> one{1};
  const auto p1 = pool.forward(x1, one, nullptr);
  const Matrix h1 = pool.conv.forward(x1, one);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(p1[c], h1(0, c));

  std::fill(pool.score_w.value.begin(), pool.score_w.value.end(), 0.0);
  const Matrix x = gen::normal_matrix(5, 2, rng);
  const std::vector<std::uint8_t> mask{1, 0, 1, 1, 0};
  const auto p = pool.forward(x, mask, nullptr);
  const Matrix h = pool.conv.forward(x, mask);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(p[c], (h(0, c) + h(2, c) + h(3, c)) / 3.0, 1e-12);

  const std::vector<std::uint8_t> none(5, 0);
  EXPECT_THROW(pool.forward(x, none, nullptr), Error);
}

TEST(AttentionPool, Gradients) {
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    AttentionPooler pool("a", 3, 4, 3);
    pool.init(rng);
    const Matrix x = gen::normal_matrix(2 + rng.below(5), 3, rng);
    std::vector<std::uint8_t> mask(x.rows(), 1);
    mask[x.rows() - 1] = 0;
    const Matrix g = gen::normal_matrix(1, 4, rng);
    ParamList params;
    pool.collect(params);
    AttentionPooler::Cache cache;
    auto fwd = [&] {
      auto v = pool.forward(x, mask, &cache);
      Matrix m(1, v.size());
      std::copy(v.begin(), v.end(), m.data().begin());
      return m;
    };
    auto bwd = [&](const Matrix& dy) { pool.backward(x, mask, cache, dy.row(0)); };
    EXPECT_LT(check_params(params, fwd, bwd, g, true), 1e-10);
  }
}

TEST(MeanPool, DirectSum) {
  Rng rng(8);
  const Matrix x = gen::normal_matrix(4, 3, rng);
  const std::vector<std::uint8_t> mask{1, 0, 1, 1};
  const auto m = mean_pool(x, mask);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(m[c], (x(0, c) + x(2, c) + x(3, c)) / 3.0, 1e-15);
  const std::vector<std::uint8_t> only3{0, 0, 0, 1};
  const auto r3 = mean_pool(x, only3);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(r3[c], x(3, c));
  const auto cls = cls_pool(x);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(cls[c], x(0, c));
  const std::vector<std::uint8_t> none(4, 0);
  try {
    mean_pool(x, none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyMask);
  }
}

TEST(Lora, ZeroAAndAlphaLinearity) {
  Rng rng(9);
  LoraAdapter ad("t", 4, 6, 2, 16.0);
  ad.init(rng);
  const auto x = gen::values(6, rng);
  const auto y0 = lora_forward(ad, x);
  for (std::size_t i = 0; i < 4; ++i) {
    double want = 0.0;
    for (std::size_t j = 0; j < 6; ++j) want += ad.frozen.value[i * 6 + j] * x[j];
    EXPECT_NEAR(y0[i], want, 1e-12);
  }
  fill_normal(ad.a.value, rng, 1.0);
  const auto y1 = lora_forward(ad, x);
  LoraAdapter twice("t", 4, 6, 2, 32.0);
  twice.frozen.value = ad.frozen.value;
  twice.a.value = ad.a.value;
  twice.b.value = ad.b.value;
  const auto y2 = lora_forward(twice, x);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(y2[i] - y0[i], 2.0 * (y1[i] - y0[i]), 1e-12);
}

TEST(Lora, ReproducesTargetUpdate) {
  Rng rng(10);
  const std::size_t n = 3, m = 4, r = 3;
  LoraAdapter ad("t", n, m, r, 6.0);
  ad.init(rng);
  // A = I, B = (r/alpha) dW reproduces W + dW.
  const Matrix dw = gen::normal_matrix(n, m, rng);
  std::fill(ad.a.value.begin(), ad.a.value.end(), 0.0);
  for (std::size_t i = 0; i < r; ++i) ad.a.value[i * r + i] = 1.0;
  for (std::size_t i = 0; i < r * m; ++i) ad.b.value[i] = dw.data()[i] / ad.scale();
  const auto x = gen::values(m, rng);
  const auto y = lora_forward(ad, x);
  for (std::size_t i = 0; i < n; ++i) {
    double want = 0.0;
    for (std::size_t j = 0; j < m; ++j) want += (ad.frozen.value[i * m + j] + dw(i, j)) * x[j];
    EXPECT_NEAR(y[i], want, 1e-9);
  }
}

TEST(Lora, OnlyAdapterReceivesGradient) {
  Rng rng(11);
  LoraAdapter ad("t", 3, 5, 2, 4.0);
  ad.init(rng);
  fill_normal(ad.a.value, rng, 0.5);
  const Matrix x = gen::normal_matrix(4, 5, rng);
  const Matrix g = gen::normal_matrix(4, 3, rng);
  ParamList params;
  ad.collect(params);
  EXPECT_FALSE(ad.frozen.trainable);
  EXPECT_EQ(count_parameters(params), 3u * 2 + 2u * 5);
  auto fwd = [&] { return ad.forward(x); };
  auto bwd = [&](const Matrix& dy) { ad.backward(x, dy); };
  EXPECT_LT(check_params(params, fwd, bwd, g), 1e-7);
  for (double v : ad.frozen.grad) EXPECT_EQ(v, 0.0);
}

TEST(L2Normalize, Cases) {
  const auto v = l2_normalize(std::vector<double>{3.0, 4.0});
  EXPECT_NEAR(v[0], 0.6, 1e-15);
  EXPECT_NEAR(v[1], 0.8, 1e-15);
  EXPECT_EQ(l2_normalize(v), v);
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    const auto x = gen::values(1 + rng.below(10), rng);
    const auto u = l2_normalize(x);
    EXPECT_NEAR(dot(u, x), std::sqrt(dot(x, x)), 1e-9);
  }
  try {
    l2_normalize(std::vector<double>{0.0, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
  }
}

class MlpGrad : public ::testing::TestWithParam<int> {};

TEST_P(MlpGrad, MatchesFiniteDifferences) {
  const int bits = GetParam();
  MlpConfig c;
  c.in_dim = 5;
  c.hidden = bits & 8 ? std::vector<std::size_t>{6, 6} : std::vector<std::size_t>{6, 4};
  c.out_dim = 3;
  c.activation = bits & 1 ? Activation::gelu : Activation::relu;
  c.batchnorm = bits & 2;
  c.layernorm = bits & 4;
  c.residual = bits & 8 || bits & 16;
  Rng rng(100 + bits);
  Mlp mlp("m", c);
  mlp.init(rng);
  const Matrix x = gen::normal_matrix(6, 5, rng);
  const Matrix g = gen::normal_matrix(6, 3, rng);
  ParamList params;
  mlp.collect(params);
  Mlp::Cache cache;
  auto fwd = [&] { return mlp.forward(x, Mode::train, nullptr, &cache); };
  auto bwd = [&](const Matrix& dy) { mlp.backward(cache, dy); };
  // Running statistics move on every train-mode forward; they do not feed
  // back into the train-mode output. A small step keeps the stencil off
  // relu kinks.
  const double h = c.activation == Activation::relu ? 1e-5 : 1e-3;
  EXPECT_LT(check_params(params, fwd, bwd, g, false, h, 1e-4), 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Configs, MlpGrad, ::testing::Range(0, 32));

TEST(Mlp, DropoutOnlyInTraining) {
  MlpConfig c{4, {8}, 2, Activation::relu, 0.5, false, false, false};
  Rng rng(13);
  Mlp mlp("m", c);
  mlp.init(rng);
  const Matrix x = gen::normal_matrix(3, 4, rng);
  EXPECT_EQ(mlp.forward(x, Mode::eval, nullptr, nullptr), mlp.forward(x, Mode::eval, &rng, nullptr));
  Rng r1(1), r2(2);
  EXPECT_NE(mlp.forward(x, Mode::train, &r1, nullptr), mlp.forward(x, Mode::train, &r2, nullptr));
}

TEST(Mlp, BackwardWithoutForwardCache) {
  MlpConfig c{4, {8}, 2};
  Mlp mlp("m", c);
  try {
    mlp.backward(Mlp::Cache{}, Matrix(1, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingForwardCache);
  }
}

TEST(GradCheck, QuadraticIsExact) {
  Rng rng(14);
  const auto x = gen::values(10, rng);
  auto f = [](std::span<const double> p) { return dot(p, p); };
  std::vector<double> analytic(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) analytic[i] = 2.0 * x[i];
  EXPECT_LT(grad_check(f, x, analytic), 1e-8);
}
