#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "onealign/tensor.hpp"

namespace onealign {

/// Low-rank adapter around a frozen weight: W' = W + (alpha / r) A B with
/// W [n x m] frozen, A [n x r], B [r x m]. Only A and B receive gradients.
class LoraAdapter {
 public:
  LoraAdapter() = default;
  LoraAdapter(const std::string& name, std::size_t out_dim, std::size_t in_dim, std::size_t rank,
              double alpha);

  /// W ~ U(+-1/sqrt(m)), B ~ U(+-1/sqrt(m)), A = 0 so the adapter starts as W.
  void init(Rng& rng);

  /// x: [N x m] -> [N x n]
  Matrix forward(const Matrix& x) const;
  /// Accumulates dA, dB (never dW); returns dx.
  Matrix backward(const Matrix& x, const Matrix& dy);
  void collect(ParamList& out);

  std::size_t rank() const noexcept { return rank_; }
  double alpha() const noexcept { return alpha_; }
  double scale() const noexcept { return alpha_ / static_cast<double>(rank_); }
  std::size_t in_dim() const noexcept { return in_; }
  std::size_t out_dim() const noexcept { return out_; }

  Param frozen;  // [n x m], trainable = false
  Param a;       // [n x r]
  Param b;       // [r x m]

 private:
  std::size_t out_ = 0;
  std::size_t in_ = 0;
  std::size_t rank_ = 1;
  double alpha_ = 1.0;
};

/// Single-vector form: y = W x + (alpha/r) A (B x).
std::vector<double> lora_forward(const LoraAdapter& adapter, std::span<const double> x);

}  // namespace onealign
