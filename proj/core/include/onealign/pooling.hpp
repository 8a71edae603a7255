#pragma once

// Token-level poolers: masked 1D convolution, attention pooling, mean and
// cls pooling, each with an explicit backward.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "onealign/tensor.hpp"

namespace onealign {

using Mask = std::span<const std::uint8_t>;

/// y[t][j] = sum_i sum_k w[j][i][k] * x[t+k-(K-1)/2][i] * m[t+k-(K-1)/2],
/// zero outside [0, L). No bias.
class MaskedConv1d {
 public:
  MaskedConv1d() = default;
  MaskedConv1d(const std::string& name, std::size_t in_channels, std::size_t out_channels,
               std::size_t kernel);

  void init(Rng& rng);

  /// x: [L x C_in] -> [L x C_out]
  Matrix forward(const Matrix& x, Mask mask) const;
  /// Accumulates dw; returns dx (zero at masked positions).
  Matrix backward(const Matrix& x, Mask mask, const Matrix& dy);
  void collect(ParamList& out);

  std::size_t in_channels() const noexcept { return in_; }
  std::size_t out_channels() const noexcept { return out_; }
  std::size_t kernel() const noexcept { return kernel_; }

  Param weight;  // [C_out x C_in x K]

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  std::size_t kernel_ = 1;
};

/// Masked convolution followed by a linear position score and a softmax
/// restricted to unmasked positions:
///   h = conv(x, m);  s_t = score_w . h_t + score_b;
///   alpha = softmax_{t : m_t = 1}(s);  pooled = sum_t alpha_t h_t.
class AttentionPooler {
 public:
  struct Cache {
    Matrix h;
    std::vector<double> alpha;
    std::vector<double> pooled;
  };

  AttentionPooler() = default;
  AttentionPooler(const std::string& name, std::size_t in_channels, std::size_t out_channels,
                  std::size_t kernel);

  void init(Rng& rng);

  /// Throws EmptyMask when no position is unmasked.
  std::vector<double> forward(const Matrix& x, Mask mask, Cache* cache) const;
  Matrix backward(const Matrix& x, Mask mask, const Cache& cache, std::span<const double> dpooled);
  void collect(ParamList& out);

  std::size_t out_channels() const noexcept { return conv.out_channels(); }

  MaskedConv1d conv;
  Param score_w;  // [C_out]
  Param score_b;  // [1]
};

/// Mean over unmasked rows; throws EmptyMask when none.
std::vector<double> mean_pool(const Matrix& x, Mask mask);
Matrix mean_pool_backward(std::size_t length, Mask mask, std::span<const double> dpooled);

/// First row; throws EmptyMask when L == 0.
std::vector<double> cls_pool(const Matrix& x);
Matrix cls_pool_backward(std::size_t length, std::span<const double> dpooled);

}  // namespace onealign
