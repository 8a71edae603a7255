#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "onealign/layers.hpp"

namespace onealign {

struct MlpConfig {
  std::size_t in_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t out_dim = 0;
  Activation activation = Activation::relu;
  double dropout = 0.0;
  bool batchnorm = false;
  bool layernorm = false;
  bool residual = false;
};

/// Stack of hidden blocks
///   Linear -> [BatchNorm] -> [LayerNorm] -> activation -> dropout (+ skip)
/// followed by a linear output layer. The residual skip is the identity when
/// the block keeps its width and a bias-free linear map otherwise.
class Mlp {
 public:
  struct BlockCache {
    Matrix input;
    BatchNorm1d::Cache bn;
    LayerNorm::Cache ln;
    Matrix pre_act;
    Matrix dropout_mask;
  };
  struct Cache {
    std::vector<BlockCache> blocks;
    Matrix head_input;
    bool valid = false;
  };

  Mlp() = default;
  Mlp(const std::string& name, MlpConfig config);

  void init(Rng& rng);

  /// Dropout draws from `rng` in train mode; pass nullptr to disable.
  Matrix forward(const Matrix& x, Mode mode, Rng* rng, Cache* cache);
  /// Throws MissingForwardCache if `cache` was not filled by forward.
  Matrix backward(const Cache& cache, const Matrix& dy);

  void collect(ParamList& out);
  const MlpConfig& config() const noexcept { return config_; }

 private:
  struct Block {
    Linear linear;
    std::optional<BatchNorm1d> bn;
    std::optional<LayerNorm> ln;
    std::optional<Linear> shortcut;  // only for width-changing residual blocks
  };

  MlpConfig config_;
  std::vector<Block> blocks_;
  Linear out_;
};

}  // namespace onealign
