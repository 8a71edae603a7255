#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "onealign/tensor.hpp"

namespace onealign {

struct AdamWHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  AdamWHyper hyper;
  std::uint64_t t = 0;
  /// One moment buffer per trainable param, in collection order.
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  /// Round weights and moments to f32 after every step so the state is
  /// exactly representable in a checkpoint.
  bool f32_storage = false;
};

/// Decoupled AdamW on every trainable param using its grad buffer:
///   w <- w (1 - lr * wd)            (params with decay = true)
///   m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
///   w <- w - lr * m_hat / (sqrt(v_hat) + eps)
/// Frozen params are skipped and keep no moments.
void adamw_step(const ParamList& params, AdamWState& state);

/// Same update on one flat buffer (state holds a single moment slot).
void adamw_step(std::span<double> weights, std::span<const double> grads, AdamWState& state,
                bool decay = true);

}  // namespace onealign
