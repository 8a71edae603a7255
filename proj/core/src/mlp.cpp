#include "onealign/mlp.hpp"

#include "onealign/error.hpp"

namespace onealign {

Mlp::Mlp(const std::string& name, MlpConfig config) : config_(std::move(config)) {
  if (config_.dropout < 0.0 || config_.dropout >= 1.0) fail(ErrorCode::InvalidArgument, "dropout must be in [0,1)");
  std::size_t width = config_.in_dim;
  for (std::size_t i = 0; i < config_.hidden.size(); ++i) {
    const std::string prefix = name + ".block" + std::to_string(i);
    Block b{Linear(prefix + ".linear", width, config_.hidden[i]), std::nullopt, std::nullopt, std::nullopt};
    if (config_.batchnorm) b.bn.emplace(prefix + ".bn", config_.hidden[i]);
    if (config_.layernorm) b.ln.emplace(prefix + ".ln", config_.hidden[i]);
    if (config_.residual && width != config_.hidden[i]) {
      b.shortcut.emplace(prefix + ".shortcut", width, config_.hidden[i], false);
    }
    blocks_.push_back(std::move(b));
    width = config_.hidden[i];
  }
  out_ = Linear(name + ".out", width, config_.out_dim);
}

void Mlp::init(Rng& rng) {
  for (auto& b : blocks_) {
    b.linear.init(rng);
    if (b.shortcut) b.shortcut->init(rng);
  }
  out_.init(rng);
}

Matrix Mlp::forward(const Matrix& x, Mode mode, Rng* rng, Cache* cache) {
  if (cache) {
    cache->blocks.clear();
    cache->valid = false;
  }
  Matrix h = x;
  for (auto& b : blocks_) {
    BlockCache bc;
    Matrix z = b.linear.forward(h);
    if (b.bn) z = b.bn->forward(z, mode, &bc.bn);
    if (b.ln) z = b.ln->forward(z, &bc.ln);
    Matrix a = activate(z, config_.activation);
    a = dropout_forward(a, config_.dropout, mode, rng, &bc.dropout_mask);
    if (config_.residual) {
      const Matrix skip = b.shortcut ? b.shortcut->forward(h) : h;
      for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] += skip.data()[i];
    }
    if (cache) {
      bc.input = std::move(h);
      bc.pre_act = std::move(z);
      cache->blocks.push_back(std::move(bc));
    }
    h = std::move(a);
  }
  Matrix y = out_.forward(h);
  if (cache) {
    cache->head_input = std::move(h);
    cache->valid = true;
  }
  return y;
}

Matrix Mlp::backward(const Cache& cache, const Matrix& dy) {
  if (!cache.valid || cache.blocks.size() != blocks_.size()) {
    fail(ErrorCode::MissingForwardCache, "Mlp::backward called without a forward cache");
  }
  Matrix dh = out_.backward(cache.head_input, dy);
  for (std::size_t i = blocks_.size(); i-- > 0;) {
    auto& b = blocks_[i];
    const auto& bc = cache.blocks[i];
    Matrix d_skip_in;
    if (config_.residual) {
      d_skip_in = b.shortcut ? b.shortcut->backward(bc.input, dh) : dh;
    }
    Matrix dz = dropout_backward(bc.dropout_mask, dh);
    dz = activate_backward(bc.pre_act, dz, config_.activation);
    if (b.ln) dz = b.ln->backward(bc.ln, dz);
    if (b.bn) dz = b.bn->backward(bc.bn, dz);
    Matrix dx = b.linear.backward(bc.input, dz);
    if (config_.residual) {
      for (std::size_t k = 0; k < dx.data().size(); ++k) dx.data()[k] += d_skip_in.data()[k];
    }
    dh = std::move(dx);
  }
  return dh;
}

void Mlp::collect(ParamList& out) {
  for (auto& b : blocks_) {
    b.linear.collect(out);
    if (b.bn) b.bn->collect(out);
    if (b.ln) b.ln->collect(out);
    if (b.shortcut) b.shortcut->collect(out);
  }
  out_.collect(out);
}

}  // namespace onealign
