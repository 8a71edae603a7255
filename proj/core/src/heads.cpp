#include "onealign/heads.hpp"

#include "onealign/error.hpp"
#include "onealign/rng.hpp"

namespace onealign {

std::string_view to_string(PoolerKind k) {
  switch (k) {
    case PoolerKind::none: return "none";
    case PoolerKind::mean: return "mean";
    case PoolerKind::cls: return "cls";
    case PoolerKind::attention: return "attention";
  }
  return "?";
}

PoolerKind parse_pooler(std::string_view s) {
  if (s == "none" || s == "-") return PoolerKind::none;
  if (s == "mean") return PoolerKind::mean;
  if (s == "cls") return PoolerKind::cls;
  if (s == "attention") return PoolerKind::attention;
  fail(ErrorCode::InvalidArgument, "unknown pooler '" + std::string(s) + "'");
}

std::string_view to_string(ProjectionKind k) { return k == ProjectionKind::linear ? "linear" : "mlp"; }

ProjectionKind parse_projection(std::string_view s) {
  if (s == "linear") return ProjectionKind::linear;
  if (s == "mlp" || s == "MLP") return ProjectionKind::mlp;
  fail(ErrorCode::InvalidArgument, "unknown projection '" + std::string(s) + "'");
}

void to_json(nlohmann::json& j, const HeadSpec& s) {
  j = nlohmann::json{{"modality", s.modality},
                     {"pooler", to_string(s.pooler)},
                     {"projection", to_string(s.projection)},
                     {"input_dim", s.input_dim},
                     {"conv_channels", s.conv_channels},
                     {"kernel", s.kernel},
                     {"lora_rank", s.lora_rank},
                     {"lora_alpha", s.lora_alpha},
                     {"mlp_hidden", s.mlp_hidden},
                     {"activation", to_string(s.activation)},
                     {"dropout", s.dropout}};
}

void from_json(const nlohmann::json& j, HeadSpec& s) {
  s.modality = j.at("modality").get<std::string>();
  if (j.contains("pooler")) s.pooler = parse_pooler(j["pooler"].get<std::string>());
  if (j.contains("projection")) s.projection = parse_projection(j["projection"].get<std::string>());
  s.input_dim = j.value("input_dim", s.input_dim);
  s.conv_channels = j.value("conv_channels", s.conv_channels);
  s.kernel = j.value("kernel", s.kernel);
  s.lora_rank = j.value("lora_rank", s.lora_rank);
  s.lora_alpha = j.value("lora_alpha", s.lora_alpha);
  if (j.contains("mlp_hidden")) s.mlp_hidden = j["mlp_hidden"].get<std::vector<std::size_t>>();
  if (j.contains("activation")) s.activation = parse_activation(j["activation"].get<std::string>());
  s.dropout = j.value("dropout", s.dropout);
}

HeadSpec default_head_spec(const std::string& modality, bool tokens, std::size_t input_dim) {
  HeadSpec s;
  s.modality = modality;
  s.input_dim = input_dim;
  if (modality == "text") {
    s.pooler = tokens ? PoolerKind::cls : PoolerKind::none;
    s.projection = ProjectionKind::mlp;
    s.lora_rank = 8;
  } else if (modality == "struct_token") {
    s.pooler = tokens ? PoolerKind::mean : PoolerKind::none;
  } else if (tokens) {
    s.pooler = PoolerKind::attention;
  }
  return s;
}

ProjectionHead::ProjectionHead(HeadSpec spec, std::size_t shared_dim)
    : spec_(std::move(spec)), shared_dim_(shared_dim) {
  const std::string& n = spec_.modality;
  if (spec_.input_dim == 0 || shared_dim_ == 0) fail(ErrorCode::ShapeMismatch, n + ": zero head width");
  if (spec_.pooler == PoolerKind::attention) {
    attention_ = AttentionPooler(n + ".attn", spec_.input_dim, spec_.conv_channels, spec_.kernel);
  }
  std::size_t width = pooled_dim();
  if (spec_.lora_rank > 0) lora_ = LoraAdapter(n + ".lora", width, width, spec_.lora_rank, spec_.lora_alpha);
  if (spec_.projection == ProjectionKind::linear) {
    linear_ = Linear(n + ".proj", width, shared_dim_);
  } else {
    MlpConfig c;
    c.in_dim = width;
    c.hidden = spec_.mlp_hidden;
    c.out_dim = shared_dim_;
    c.activation = spec_.activation;
    c.dropout = spec_.dropout;
    mlp_ = Mlp(n + ".proj", c);
  }
}

std::size_t ProjectionHead::pooled_dim() const noexcept {
  return spec_.pooler == PoolerKind::attention ? spec_.conv_channels : spec_.input_dim;
}

void ProjectionHead::init(Rng& rng) {
  if (spec_.pooler == PoolerKind::attention) attention_.init(rng);
  if (spec_.lora_rank > 0) lora_.init(rng);
  if (spec_.projection == ProjectionKind::linear) linear_.init(rng); else mlp_.init(rng);
}

Matrix ProjectionHead::forward(const HeadInput& in, Mode mode, Rng* rng, Cache* cache) {
  const std::string& n = spec_.modality;
  const std::size_t batch = in.batch();
  if (batch == 0) fail(ErrorCode::EmptyBatch, n + ": empty head input");
  Matrix pooled;
  if (spec_.pooler == PoolerKind::none) {
    if (in.is_tokens()) fail(ErrorCode::ShapeMismatch, n + ": token input needs a pooler");
    if (in.pooled.cols() != spec_.input_dim) fail(ErrorCode::ShapeMismatch, n + ": input width");
    pooled = in.pooled;
  } else {
    if (!in.is_tokens()) fail(ErrorCode::ShapeMismatch, n + ": pooler needs token input");
    if (in.masks.size() != batch) fail(ErrorCode::ShapeMismatch, n + ": mask count");
    pooled = Matrix(batch, pooled_dim());
    if (cache) cache->attn.assign(spec_.pooler == PoolerKind::attention ? batch : 0, {});
    for (std::size_t r = 0; r < batch; ++r) {
      const Matrix& x = in.tokens[r];
      const Mask mask(in.masks[r]);
      if (x.cols() != spec_.input_dim || mask.size() != x.rows()) {
        fail(ErrorCode::ShapeMismatch, n + ": token shape", r);
      }
      std::vector<double> v;
      switch (spec_.pooler) {
        case PoolerKind::mean: v = mean_pool(x, mask); break;
        case PoolerKind::cls: v = cls_pool(x); break;
        case PoolerKind::attention:
          v = attention_.forward(x, mask, cache ? &cache->attn[r] : nullptr);
          break;
        case PoolerKind::none: break;
      }
      std::copy(v.begin(), v.end(), pooled.row(r).begin());
    }
  }
  Matrix feat = spec_.lora_rank > 0 ? lora_.forward(pooled) : pooled;
  Matrix out;
  if (spec_.projection == ProjectionKind::linear) {
    out = linear_.forward(feat);
  } else {
    out = mlp_.forward(feat, mode, rng, cache ? &cache->mlp : nullptr);
  }
  if (cache) {
    cache->pooled = std::move(pooled);
    cache->lora_out = spec_.lora_rank > 0 ? std::move(feat) : Matrix();
    cache->valid = true;
  }
  return out;
}

void ProjectionHead::backward(const HeadInput& in, const Cache& cache, const Matrix& dproj) {
  if (!cache.valid) fail(ErrorCode::MissingForwardCache, spec_.modality + ": backward without forward");
  const Matrix& feat = spec_.lora_rank > 0 ? cache.lora_out : cache.pooled;
  Matrix dfeat = spec_.projection == ProjectionKind::linear ? linear_.backward(feat, dproj)
                                                            : mlp_.backward(cache.mlp, dproj);
  if (spec_.pooler != PoolerKind::attention && spec_.lora_rank == 0) return;
  Matrix dpooled = spec_.lora_rank > 0 ? lora_.backward(cache.pooled, dfeat) : std::move(dfeat);
  if (spec_.pooler != PoolerKind::attention) return;  // mean/cls have no parameters
  for (std::size_t r = 0; r < in.tokens.size(); ++r) {
    attention_.backward(in.tokens[r], Mask(in.masks[r]), cache.attn[r], dpooled.row(r));
  }
}

void ProjectionHead::collect(ParamList& out) {
  if (spec_.pooler == PoolerKind::attention) attention_.collect(out);
  if (spec_.lora_rank > 0) lora_.collect(out);
  if (spec_.projection == ProjectionKind::linear) linear_.collect(out); else mlp_.collect(out);
}

ParamList ProjectionHead::params() {
  ParamList p;
  collect(p);
  return p;
}

std::vector<const Param*> ProjectionHead::params() const {
  ParamList p = const_cast<ProjectionHead*>(this)->params();
  return {p.begin(), p.end()};
}

}  // namespace onealign
