#include <cmath>

#include <gtest/gtest.h>

#include "onealign/error.hpp"
#include "onealign/optim.hpp"
#include "onealign/tensor.hpp"

using namespace onealign;

TEST(AdamW, DecayOnlyStep) {
  AdamWState s;
  s.hyper.lr = 0.001;
  s.hyper.weight_decay = 0.1;
  std::vector<double> w{2.0, -3.0};
  std::vector<double> g{0.0, 0.0};
  adamw_step(w, g, s);
  EXPECT_EQ(w[0], 2.0 * (1.0 - 0.001 * 0.1));
  EXPECT_EQ(w[1], -3.0 * (1.0 - 0.001 * 0.1));
}

TEST(AdamW, FirstStepMagnitude) {
  AdamWState s;
  std::vector<double> w{0.0};
  std::vector<double> g{1.0};
  adamw_step(w, g, s);
  EXPECT_NEAR(w[0], -s.hyper.lr / (1.0 + s.hyper.eps), 1e-18);
}

TEST(AdamW, RepeatedGradientApproachesLr) {
  AdamWState s;
  s.hyper.weight_decay = 0.0;
  std::vector<double> w{0.0};
  const std::vector<double> g{0.3};
  double prev = 0.0, step = 0.0;
  for (int t = 0; t < 200; ++t) {
    prev = w[0];
    adamw_step(w, g, s);
    step = std::abs(w[0] - prev);
    // Bias-corrected moments of a constant gradient are exact: m_hat = g,
    // v_hat = g^2.
    EXPECT_NEAR(step, s.hyper.lr * 0.3 / (0.3 + s.hyper.eps), 1e-15);
  }
}

TEST(AdamW, ParamListSkipsFrozenAndBias) {
  Param w("w", {2}), b("b", {2}, true, false), f("f", {2}, false, false);
  w.value = {1.0, 1.0};
  b.value = {1.0, 1.0};
  f.value = {1.0, 1.0};
  w.grad = b.grad = f.grad = {0.0, 0.0};
  AdamWState s;
  s.hyper.weight_decay = 0.5;
  adamw_step(ParamList{&w, &b, &f}, s);
  EXPECT_LT(w.value[0], 1.0);
  EXPECT_EQ(b.value[0], 1.0);
  EXPECT_EQ(f.value[0], 1.0);
}

TEST(AdamW, ShapeMismatch) {
  AdamWState s;
  std::vector<double> w{0.0, 1.0};
  std::vector<double> g{1.0};
  try {
    adamw_step(w, g, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(AdamW, F32StorageRoundsEverything) {
  Param w("w", {3});
  w.value = {0.1, 0.2, 0.3};
  w.grad = {0.01, -0.02, 0.03};
  AdamWState s;
  s.f32_storage = true;
  adamw_step(ParamList{&w}, s);
  for (double v : w.value) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
  for (double v : s.m[0]) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
  for (double v : s.v[0]) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
}
