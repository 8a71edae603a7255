#include "onealign/lora.hpp"

#include <cmath>

#include "onealign/error.hpp"
#include "onealign/rng.hpp"

namespace onealign {

LoraAdapter::LoraAdapter(const std::string& name, std::size_t out_dim, std::size_t in_dim,
                         std::size_t rank, double alpha)
    : frozen(name + ".frozen", {out_dim, in_dim}, false, false),
      a(name + ".lora_a", {out_dim, rank}),
      b(name + ".lora_b", {rank, in_dim}),
      out_(out_dim),
      in_(in_dim),
      rank_(rank),
      alpha_(alpha) {
  if (rank == 0 || out_dim == 0 || in_dim == 0) fail(ErrorCode::ShapeMismatch, name + ": zero-sized adapter");
}

void LoraAdapter::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  fill_uniform(frozen.value, rng, bound);
  fill_uniform(b.value, rng, bound);
  std::fill(a.value.begin(), a.value.end(), 0.0);
}

Matrix LoraAdapter::forward(const Matrix& x) const {
  if (x.cols() != in_) fail(ErrorCode::ShapeMismatch, frozen.name + ": input width");
  Matrix y(x.rows(), out_);
  const std::span<const double> w(frozen.value), bv(b.value), av(a.value);
  std::vector<double> bx(rank_);
  const double s = scale();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    for (std::size_t q = 0; q < rank_; ++q) bx[q] = dot(bv.subspan(q * in_, in_), xr);
    auto yr = y.row(r);
    for (std::size_t o = 0; o < out_; ++o) {
      yr[o] = dot(w.subspan(o * in_, in_), xr) + s * dot(av.subspan(o * rank_, rank_), bx);
    }
  }
  return y;
}

Matrix LoraAdapter::backward(const Matrix& x, const Matrix& dy) {
  if (dy.cols() != out_ || dy.rows() != x.rows()) fail(ErrorCode::ShapeMismatch, frozen.name + ": upstream");
  Matrix dx(x.rows(), in_);
  const std::span<const double> w(frozen.value), bv(b.value), av(a.value);
  const double s = scale();
  std::vector<double> bx(rank_), at_dy(rank_);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto dyr = dy.row(r);
    auto dxr = dx.row(r);
    for (std::size_t q = 0; q < rank_; ++q) bx[q] = dot(bv.subspan(q * in_, in_), xr);
    std::fill(at_dy.begin(), at_dy.end(), 0.0);
    for (std::size_t o = 0; o < out_; ++o) {
      const double g = dyr[o];
      if (g == 0.0) continue;
      axpy(g, w.subspan(o * in_, in_), dxr);
      for (std::size_t q = 0; q < rank_; ++q) {
        a.grad[o * rank_ + q] += s * g * bx[q];
        at_dy[q] += g * av[o * rank_ + q];
      }
    }
    for (std::size_t q = 0; q < rank_; ++q) {
      const double g = s * at_dy[q];
      if (g == 0.0) continue;
      axpy(g, xr, std::span<double>(b.grad).subspan(q * in_, in_));
      axpy(g, bv.subspan(q * in_, in_), dxr);
    }
  }
  return dx;
}

void LoraAdapter::collect(ParamList& out) {
  out.push_back(&frozen);
  out.push_back(&a);
  out.push_back(&b);
}

std::vector<double> lora_forward(const LoraAdapter& adapter, std::span<const double> x) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  auto y = adapter.forward(m);
  return y.data();
}

}  // namespace onealign
