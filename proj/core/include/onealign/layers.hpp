#pragma once

// Dense layers with hand-written reverse-mode gradients. Forward passes are
// const and pure; backward passes take the cached forward values explicitly
// and accumulate into each Param's grad buffer.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onealign/tensor.hpp"

namespace onealign {

enum class Mode { train, eval };

class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in_dim, std::size_t out_dim, bool bias = true);

  /// PyTorch default: U(-1/sqrt(in), 1/sqrt(in)) for weight and bias.
  void init(Rng& rng);

  /// x: [n x in] -> [n x out]
  Matrix forward(const Matrix& x) const;
  /// Accumulates dW = dy^T x, db = sum(dy); returns dx = dy W.
  Matrix backward(const Matrix& x, const Matrix& dy);

  void collect(ParamList& out);

  std::size_t in_dim() const noexcept { return in_; }
  std::size_t out_dim() const noexcept { return out_; }
  bool has_bias() const noexcept { return has_bias_; }

  Param weight;  // [out x in]
  Param bias;    // [out]

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  bool has_bias_ = true;
};

enum class Activation { identity, relu, gelu };
std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);

Matrix activate(const Matrix& pre, Activation a);
Matrix activate_backward(const Matrix& pre, const Matrix& dy, Activation a);

/// Batch normalization over the batch axis. Running estimates follow
/// r <- momentum * r + (1 - momentum) * batch and are used in eval mode.
class BatchNorm1d {
 public:
  struct Cache {
    Matrix xhat;
    std::vector<double> inv_std;
    Mode mode = Mode::train;
  };

  BatchNorm1d() = default;
  BatchNorm1d(const std::string& name, std::size_t dim, double momentum = 0.9, double eps = 1e-5);

  /// Train mode updates the running estimates, hence non-const.
  Matrix forward(const Matrix& x, Mode mode, Cache* cache);
  Matrix backward(const Cache& cache, const Matrix& dy);
  void collect(ParamList& out);

  Param gamma;
  Param beta;
  Param running_mean;  // frozen buffers, checkpointed alongside the weights
  Param running_var;

 private:
  double momentum_ = 0.9;
  double eps_ = 1e-5;
};

class LayerNorm {
 public:
  struct Cache {
    Matrix xhat;
    std::vector<double> inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, std::size_t dim, double eps = 1e-5);

  Matrix forward(const Matrix& x, Cache* cache) const;
  Matrix backward(const Cache& cache, const Matrix& dy);
  void collect(ParamList& out);

  Param gamma;
  Param beta;

 private:
  double eps_ = 1e-5;
};

/// Inverted dropout: kept units scaled by 1/(1-p) at train time; identity in
/// eval mode or when rng is null.
Matrix dropout_forward(const Matrix& x, double p, Mode mode, Rng* rng, Matrix* mask);
Matrix dropout_backward(const Matrix& mask, const Matrix& dy);

/// Returns v / ||v||_2; throws ZeroVector when ||v|| == 0.
std::vector<double> l2_normalize(std::span<const double> v);

/// Row-wise p / sqrt(||p||^2 + eps). `norms` receives sqrt(||p||^2 + eps).
Matrix normalize_rows(const Matrix& p, double eps, std::vector<double>* norms = nullptr);
/// Pullback of normalize_rows: dp = da/r - p (p.da)/r^3.
Matrix normalize_rows_backward(const Matrix& p, const std::vector<double>& norms, const Matrix& da);

}  // namespace onealign
