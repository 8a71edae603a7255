#include "onealign/optim.hpp"

#include <cmath>

#include "onealign/error.hpp"

namespace onealign {
namespace {

void update(std::span<double> w, std::span<const double> g, std::vector<double>& m,
            std::vector<double>& v, const AdamWState& s, bool decay) {
  const auto& h = s.hyper;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(s.t));
  const double shrink = decay ? 1.0 - h.lr * h.weight_decay : 1.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] *= shrink;
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    w[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
  if (s.f32_storage) {
    round_to_f32(w);
    round_to_f32(m);
    round_to_f32(v);
  }
}

}  // namespace

void adamw_step(const ParamList& params, AdamWState& state) {
  std::size_t slots = 0;
  for (const auto* p : params) slots += p->trainable;
  if (state.m.empty()) {
    for (const auto* p : params) {
      if (!p->trainable) continue;
      state.m.emplace_back(p->size(), 0.0);
      state.v.emplace_back(p->size(), 0.0);
    }
  }
  if (state.m.size() != slots || state.v.size() != slots) {
    fail(ErrorCode::ShapeMismatch, "optimizer state has " + std::to_string(state.m.size()) +
                                       " slots for " + std::to_string(slots) + " params");
  }
  ++state.t;
  std::size_t k = 0;
  for (auto* p : params) {
    if (!p->trainable) continue;
    if (state.m[k].size() != p->size() || p->grad.size() != p->size()) {
      fail(ErrorCode::ShapeMismatch, p->name + ": moment/grad size mismatch");
    }
    update(p->value, p->grad, state.m[k], state.v[k], state, p->decay);
    ++k;
  }
}

void adamw_step(std::span<double> weights, std::span<const double> grads, AdamWState& state,
                bool decay) {
  if (weights.size() != grads.size()) fail(ErrorCode::ShapeMismatch, "weights/grads length");
  if (state.m.empty()) {
    state.m.emplace_back(weights.size(), 0.0);
    state.v.emplace_back(weights.size(), 0.0);
  }
  if (state.m.size() != 1 || state.m[0].size() != weights.size()) {
    fail(ErrorCode::ShapeMismatch, "optimizer state does not match flat buffer");
  }
  ++state.t;
  update(weights, grads, state.m[0], state.v[0], state, decay);
}

}  // namespace onealign
