#include "onealign/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "onealign/error.hpp"
#include "onealign/rng.hpp"

namespace onealign {

MaskedConv1d::MaskedConv1d(const std::string& name, std::size_t in_channels,
                           std::size_t out_channels, std::size_t kernel)
    : weight(name + ".weight", {out_channels, in_channels, kernel}),
      in_(in_channels),
      out_(out_channels),
      kernel_(kernel) {
  if (kernel == 0 || kernel % 2 == 0) fail(ErrorCode::InvalidArgument, name + ": kernel must be odd and >= 1");
  if (in_channels == 0 || out_channels == 0) fail(ErrorCode::ShapeMismatch, name + ": zero channels");
}

void MaskedConv1d::init(Rng& rng) {
  fill_uniform(weight.value, rng, 1.0 / std::sqrt(static_cast<double>(in_ * kernel_)));
}

Matrix MaskedConv1d::forward(const Matrix& x, Mask mask) const {
  const std::size_t L = x.rows();
  if (x.cols() != in_ || mask.size() != L) fail(ErrorCode::ShapeMismatch, weight.name + ": input/mask shape");
  const auto half = static_cast<std::ptrdiff_t>((kernel_ - 1) / 2);
  Matrix y(L, out_);
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t k = 0; k < kernel_; ++k) {
      const auto src = static_cast<std::ptrdiff_t>(t + k) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(L) || mask[static_cast<std::size_t>(src)] == 0) continue;
      auto xs = x.row(static_cast<std::size_t>(src));
      for (std::size_t j = 0; j < out_; ++j) {
        double acc = 0.0;
        const double* w = weight.value.data() + (j * in_) * kernel_ + k;
        for (std::size_t i = 0; i < in_; ++i) acc += w[i * kernel_] * xs[i];
        y(t, j) += acc;
      }
    }
  }
  return y;
}

Matrix MaskedConv1d::backward(const Matrix& x, Mask mask, const Matrix& dy) {
  const std::size_t L = x.rows();
  if (dy.rows() != L || dy.cols() != out_ || mask.size() != L) fail(ErrorCode::ShapeMismatch, weight.name + ": upstream");
  const auto half = static_cast<std::ptrdiff_t>((kernel_ - 1) / 2);
  Matrix dx(L, in_);
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t k = 0; k < kernel_; ++k) {
      const auto src = static_cast<std::ptrdiff_t>(t + k) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(L) || mask[static_cast<std::size_t>(src)] == 0) continue;
      const auto s = static_cast<std::size_t>(src);
      auto xs = x.row(s);
      auto dxs = dx.row(s);
      for (std::size_t j = 0; j < out_; ++j) {
        const double g = dy(t, j);
        if (g == 0.0) continue;
        const std::size_t base = (j * in_) * kernel_ + k;
        for (std::size_t i = 0; i < in_; ++i) {
          weight.grad[base + i * kernel_] += g * xs[i];
          dxs[i] += g * weight.value[base + i * kernel_];
        }
      }
    }
  }
  return dx;
}

void MaskedConv1d::collect(ParamList& out) { out.push_back(&weight); }

AttentionPooler::AttentionPooler(const std::string& name, std::size_t in_channels,
                                 std::size_t out_channels, std::size_t kernel)
    : conv(name + ".conv", in_channels, out_channels, kernel),
      score_w(name + ".score_w", {out_channels}),
      score_b(name + ".score_b", {1}, true, false) {}

void AttentionPooler::init(Rng& rng) {
  conv.init(rng);
  fill_uniform(score_w.value, rng, 1.0 / std::sqrt(static_cast<double>(conv.out_channels())));
  score_b.value[0] = 0.0;
}

std::vector<double> AttentionPooler::forward(const Matrix& x, Mask mask, Cache* cache) const {
  const std::size_t L = x.rows();
  Matrix h = conv.forward(x, mask);
  std::vector<double> scores(L, -std::numeric_limits<double>::infinity());
  double max_score = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < L; ++t) {
    if (mask[t] == 0) continue;
    scores[t] = dot(score_w.value, h.row(t)) + score_b.value[0];
    max_score = std::max(max_score, scores[t]);
  }
  if (!std::isfinite(max_score)) fail(ErrorCode::EmptyMask, "attention pooling needs an unmasked position");
  std::vector<double> alpha(L, 0.0);
  double z = 0.0;
  for (std::size_t t = 0; t < L; ++t) {
    if (mask[t] == 0) continue;
    alpha[t] = std::exp(scores[t] - max_score);
    z += alpha[t];
  }
  std::vector<double> pooled(h.cols(), 0.0);
  for (std::size_t t = 0; t < L; ++t) {
    if (mask[t] == 0) continue;
    alpha[t] /= z;
    axpy(alpha[t], h.row(t), pooled);
  }
  if (cache) *cache = Cache{std::move(h), std::move(alpha), pooled};
  return pooled;
}

Matrix AttentionPooler::backward(const Matrix& x, Mask mask, const Cache& cache,
                                 std::span<const double> dpooled) {
  const std::size_t L = x.rows();
  if (cache.h.rows() != L || cache.alpha.size() != L) {
    fail(ErrorCode::MissingForwardCache, "AttentionPooler::backward without matching forward");
  }
  const std::size_t C = cache.h.cols();
  Matrix dh(L, C);
  const double g_dot_pooled = dot(dpooled, cache.pooled);
  for (std::size_t t = 0; t < L; ++t) {
    if (mask[t] == 0) continue;
    const double a = cache.alpha[t];
    auto ht = cache.h.row(t);
    // d score_t = alpha_t (g . h_t - g . pooled)
    const double ds = a * (dot(dpooled, ht) - g_dot_pooled);
    auto dht = dh.row(t);
    for (std::size_t c = 0; c < C; ++c) {
      dht[c] = a * dpooled[c] + ds * score_w.value[c];
      score_w.grad[c] += ds * ht[c];
    }
    score_b.grad[0] += ds;
  }
  return conv.backward(x, mask, dh);
}

void AttentionPooler::collect(ParamList& out) {
  conv.collect(out);
  out.push_back(&score_w);
  out.push_back(&score_b);
}

std::vector<double> mean_pool(const Matrix& x, Mask mask) {
  if (mask.size() != x.rows()) fail(ErrorCode::ShapeMismatch, "mean_pool: mask length");
  std::vector<double> out(x.cols(), 0.0);
  std::size_t count = 0;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    if (mask[t] == 0) continue;
    axpy(1.0, x.row(t), out);
    ++count;
  }
  if (count == 0) fail(ErrorCode::EmptyMask, "mean_pool needs an unmasked position");
  for (auto& v : out) v /= static_cast<double>(count);
  return out;
}

Matrix mean_pool_backward(std::size_t length, Mask mask, std::span<const double> dpooled) {
  std::size_t count = 0;
  for (auto m : mask) count += m != 0;
  if (count == 0) fail(ErrorCode::EmptyMask, "mean_pool needs an unmasked position");
  Matrix dx(length, dpooled.size());
  for (std::size_t t = 0; t < length; ++t) {
    if (mask[t] == 0) continue;
    axpy(1.0 / static_cast<double>(count), dpooled, dx.row(t));
  }
  return dx;
}

std::vector<double> cls_pool(const Matrix& x) {
  if (x.rows() == 0) fail(ErrorCode::EmptyMask, "cls_pool on an empty sequence");
  auto r = x.row(0);
  return {r.begin(), r.end()};
}

Matrix cls_pool_backward(std::size_t length, std::span<const double> dpooled) {
  if (length == 0) fail(ErrorCode::EmptyMask, "cls_pool on an empty sequence");
  Matrix dx(length, dpooled.size());
  std::copy(dpooled.begin(), dpooled.end(), dx.row(0).begin());
  return dx;
}

}  // namespace onealign
