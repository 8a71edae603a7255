#pragma once

// Per-modality head: optional pooler over token embeddings, optional LoRA
// adapter, then a linear or MLP projection into the shared space.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "onealign/layers.hpp"
#include "onealign/lora.hpp"
#include "onealign/mlp.hpp"
#include "onealign/pooling.hpp"

namespace onealign {

enum class PoolerKind { none, mean, cls, attention };
enum class ProjectionKind { linear, mlp };

std::string_view to_string(PoolerKind k);
PoolerKind parse_pooler(std::string_view s);
std::string_view to_string(ProjectionKind k);
ProjectionKind parse_projection(std::string_view s);

struct HeadSpec {
  std::string modality;
  PoolerKind pooler = PoolerKind::none;
  ProjectionKind projection = ProjectionKind::linear;
  /// Width of the incoming features (dim for pooled sets, C_in for tokens).
  std::size_t input_dim = 0;
  std::size_t conv_channels = 64;
  std::size_t kernel = 3;
  /// 0 disables the adapter.
  std::size_t lora_rank = 0;
  double lora_alpha = 16.0;
  std::vector<std::size_t> mlp_hidden{256};
  Activation activation = Activation::gelu;
  double dropout = 0.0;
};

void to_json(nlohmann::json& j, const HeadSpec& s);
void from_json(const nlohmann::json& j, HeadSpec& s);

/// Default head per modality name: "seq" attention + linear,
/// "struct_token" mean + linear, "text" cls + LoRA + MLP, otherwise linear.
HeadSpec default_head_spec(const std::string& modality, bool tokens, std::size_t input_dim);

/// One batch of head inputs: either pooled rows or ragged token matrices.
struct HeadInput {
  Matrix pooled;
  std::vector<Matrix> tokens;
  std::vector<std::vector<std::uint8_t>> masks;

  bool is_tokens() const noexcept { return !tokens.empty(); }
  std::size_t batch() const noexcept { return is_tokens() ? tokens.size() : pooled.rows(); }
};

class ProjectionHead {
 public:
  struct Cache {
    std::vector<AttentionPooler::Cache> attn;
    Matrix pooled;
    Matrix lora_out;
    Mlp::Cache mlp;
    bool valid = false;
  };

  ProjectionHead() = default;
  ProjectionHead(HeadSpec spec, std::size_t shared_dim);

  void init(Rng& rng);

  /// Returns raw projections [batch x shared_dim] (not normalized).
  Matrix forward(const HeadInput& in, Mode mode, Rng* rng, Cache* cache);
  /// Accumulates parameter gradients for upstream dL/dproj.
  void backward(const HeadInput& in, const Cache& cache, const Matrix& dproj);

  /// Every tensor (trainable and frozen) in a stable order.
  void collect(ParamList& out);
  ParamList params();
  std::vector<const Param*> params() const;

  const HeadSpec& spec() const noexcept { return spec_; }
  std::size_t shared_dim() const noexcept { return shared_dim_; }
  std::size_t pooled_dim() const noexcept;

 private:
  HeadSpec spec_;
  std::size_t shared_dim_ = 0;
  AttentionPooler attention_;
  LoraAdapter lora_;
  Linear linear_;
  Mlp mlp_;
};

}  // namespace onealign
