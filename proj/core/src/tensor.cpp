#include "onealign/tensor.hpp"

#include "onealign/error.hpp"
#include "onealign/rng.hpp"

namespace onealign {

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Param::Param(std::string name_, std::vector<std::size_t> shape_, bool trainable_, bool decay_)
    : name(std::move(name_)), shape(std::move(shape_)), trainable(trainable_), decay(decay_) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  value.assign(n, 0.0);
  grad.assign(n, 0.0);
}

void Param::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void zero_grads(const ParamList& params) {
  for (auto* p : params) p->zero_grad();
}

std::size_t count_parameters(const ParamList& params, bool trainable_only) {
  std::size_t n = 0;
  for (const auto* p : params) {
    if (!trainable_only || p->trainable) n += p->size();
  }
  return n;
}

std::vector<double> flatten_values(const ParamList& params) {
  std::vector<double> out;
  for (const auto* p : params) {
    if (p->trainable) out.insert(out.end(), p->value.begin(), p->value.end());
  }
  return out;
}

std::vector<double> flatten_grads(const ParamList& params) {
  std::vector<double> out;
  for (const auto* p : params) {
    if (p->trainable) out.insert(out.end(), p->grad.begin(), p->grad.end());
  }
  return out;
}

void assign_values(const ParamList& params, std::span<const double> flat) {
  std::size_t k = 0;
  for (auto* p : params) {
    if (!p->trainable) continue;
    if (k + p->size() > flat.size()) fail(ErrorCode::ShapeMismatch, "flat vector too short");
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(k),
              flat.begin() + static_cast<std::ptrdiff_t>(k + p->size()), p->value.begin());
    k += p->size();
  }
  if (k != flat.size()) fail(ErrorCode::ShapeMismatch, "flat vector too long");
}

void round_to_f32(std::span<double> values) {
  for (auto& v : values) v = static_cast<double>(static_cast<float>(v));
}

void fill_uniform(std::span<double> values, Rng& rng, double bound) {
  for (auto& v : values) v = rng.uniform(-bound, bound);
}

void fill_normal(std::span<double> values, Rng& rng, double stddev) {
  for (auto& v : values) v = stddev * rng.normal();
}

}  // namespace onealign
