#include "onealign/layers.hpp"

#include <cmath>
#include <numbers>

#include "onealign/error.hpp"
#include "onealign/rng.hpp"

namespace onealign {

Linear::Linear(const std::string& name, std::size_t in_dim, std::size_t out_dim, bool bias)
    : weight(name + ".weight", {out_dim, in_dim}),
      bias(name + ".bias", {bias ? out_dim : 0}, bias, false),
      in_(in_dim),
      out_(out_dim),
      has_bias_(bias) {
  if (in_dim == 0 || out_dim == 0) fail(ErrorCode::ShapeMismatch, name + ": zero-sized linear layer");
}

void Linear::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  fill_uniform(weight.value, rng, bound);
  if (has_bias_) fill_uniform(bias.value, rng, bound);
}

Matrix Linear::forward(const Matrix& x) const {
  if (x.cols() != in_) {
    fail(ErrorCode::ShapeMismatch, weight.name + ": input width " + std::to_string(x.cols()) +
                                       " != " + std::to_string(in_));
  }
  Matrix y(x.rows(), out_);
  const std::span<const double> w(weight.value);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto yr = y.row(r);
    for (std::size_t o = 0; o < out_; ++o) {
      yr[o] = dot(w.subspan(o * in_, in_), xr) + (has_bias_ ? bias.value[o] : 0.0);
    }
  }
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
  if (dy.cols() != out_ || dy.rows() != x.rows()) fail(ErrorCode::ShapeMismatch, weight.name + ": bad upstream");
  Matrix dx(x.rows(), in_);
  std::span<double> dw(weight.grad);
  const std::span<const double> w(weight.value);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto dyr = dy.row(r);
    auto dxr = dx.row(r);
    for (std::size_t o = 0; o < out_; ++o) {
      const double g = dyr[o];
      if (g == 0.0) continue;
      axpy(g, xr, dw.subspan(o * in_, in_));
      axpy(g, w.subspan(o * in_, in_), dxr);
      if (has_bias_) bias.grad[o] += g;
    }
  }
  return dx;
}

void Linear::collect(ParamList& out) {
  out.push_back(&weight);
  if (has_bias_) out.push_back(&bias);
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::gelu: return "gelu";
  }
  return "identity";
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "gelu") return Activation::gelu;
  if (s == "identity" || s == "none") return Activation::identity;
  fail(ErrorCode::InvalidArgument, "unknown activation '" + std::string(s) + "'");
}

namespace {

// Exact (erf) GELU.
double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }
double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

}  // namespace

Matrix activate(const Matrix& pre, Activation a) {
  Matrix out = pre;
  for (auto& v : out.data()) {
    switch (a) {
      case Activation::identity: break;
      case Activation::relu: v = v > 0.0 ? v : 0.0; break;
      case Activation::gelu: v = gelu(v); break;
    }
  }
  return out;
}

Matrix activate_backward(const Matrix& pre, const Matrix& dy, Activation a) {
  Matrix dx = dy;
  auto& d = dx.data();
  const auto& p = pre.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    switch (a) {
      case Activation::identity: break;
      case Activation::relu: d[i] = p[i] > 0.0 ? d[i] : 0.0; break;
      case Activation::gelu: d[i] *= gelu_grad(p[i]); break;
    }
  }
  return dx;
}

BatchNorm1d::BatchNorm1d(const std::string& name, std::size_t dim, double momentum, double eps)
    : gamma(name + ".gamma", {dim}, true, false),
      beta(name + ".beta", {dim}, true, false),
      running_mean(name + ".running_mean", {dim}, false, false),
      running_var(name + ".running_var", {dim}, false, false),
      momentum_(momentum),
      eps_(eps) {
  std::fill(gamma.value.begin(), gamma.value.end(), 1.0);
  std::fill(running_var.value.begin(), running_var.value.end(), 1.0);
}

Matrix BatchNorm1d::forward(const Matrix& x, Mode mode, Cache* cache) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (d != gamma.size()) fail(ErrorCode::ShapeMismatch, gamma.name + ": width mismatch");
  std::vector<double> mean(d, 0.0), inv_std(d, 0.0);
  if (mode == Mode::train) {
    if (n == 0) fail(ErrorCode::EmptyBatch, gamma.name);
    std::vector<double> var(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) axpy(1.0, x.row(r), mean);
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        const double t = x(r, c) - mean[c];
        var[c] += t * t;
      }
    }
    for (std::size_t c = 0; c < d; ++c) {
      var[c] /= static_cast<double>(n);
      inv_std[c] = 1.0 / std::sqrt(var[c] + eps_);
      running_mean.value[c] = momentum_ * running_mean.value[c] + (1.0 - momentum_) * mean[c];
      running_var.value[c] = momentum_ * running_var.value[c] + (1.0 - momentum_) * var[c];
    }
  } else {
    for (std::size_t c = 0; c < d; ++c) {
      mean[c] = running_mean.value[c];
      inv_std[c] = 1.0 / std::sqrt(running_var.value[c] + eps_);
    }
  }
  Matrix xhat(n, d), y(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      xhat(r, c) = (x(r, c) - mean[c]) * inv_std[c];
      y(r, c) = gamma.value[c] * xhat(r, c) + beta.value[c];
    }
  }
  if (cache) *cache = Cache{std::move(xhat), std::move(inv_std), mode};
  return y;
}

Matrix BatchNorm1d::backward(const Cache& cache, const Matrix& dy) {
  const std::size_t n = dy.rows();
  const std::size_t d = dy.cols();
  if (cache.xhat.rows() != n || cache.xhat.cols() != d) fail(ErrorCode::MissingForwardCache, gamma.name);
  Matrix dx(n, d);
  for (std::size_t c = 0; c < d; ++c) {
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      gamma.grad[c] += dy(r, c) * cache.xhat(r, c);
      beta.grad[c] += dy(r, c);
      const double dxhat = dy(r, c) * gamma.value[c];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * cache.xhat(r, c);
    }
    for (std::size_t r = 0; r < n; ++r) {
      const double dxhat = dy(r, c) * gamma.value[c];
      if (cache.mode == Mode::train) {
        const auto nn = static_cast<double>(n);
        dx(r, c) = cache.inv_std[c] / nn * (nn * dxhat - sum_dxhat - cache.xhat(r, c) * sum_dxhat_xhat);
      } else {
        dx(r, c) = dxhat * cache.inv_std[c];
      }
    }
  }
  return dx;
}

void BatchNorm1d::collect(ParamList& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
  out.push_back(&running_mean);
  out.push_back(&running_var);
}

LayerNorm::LayerNorm(const std::string& name, std::size_t dim, double eps)
    : gamma(name + ".gamma", {dim}, true, false), beta(name + ".beta", {dim}, true, false), eps_(eps) {
  std::fill(gamma.value.begin(), gamma.value.end(), 1.0);
}

Matrix LayerNorm::forward(const Matrix& x, Cache* cache) const {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (d != gamma.size()) fail(ErrorCode::ShapeMismatch, gamma.name + ": width mismatch");
  Matrix xhat(n, d), y(n, d);
  std::vector<double> inv_std(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps_);
    for (std::size_t c = 0; c < d; ++c) {
      xhat(r, c) = (xr[c] - mean) * inv_std[r];
      y(r, c) = gamma.value[c] * xhat(r, c) + beta.value[c];
    }
  }
  if (cache) *cache = Cache{std::move(xhat), std::move(inv_std)};
  return y;
}

Matrix LayerNorm::backward(const Cache& cache, const Matrix& dy) {
  const std::size_t n = dy.rows();
  const std::size_t d = dy.cols();
  if (cache.xhat.rows() != n || cache.xhat.cols() != d) fail(ErrorCode::MissingForwardCache, gamma.name);
  Matrix dx(n, d);
  const auto dd = static_cast<double>(d);
  for (std::size_t r = 0; r < n; ++r) {
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      gamma.grad[c] += dy(r, c) * cache.xhat(r, c);
      beta.grad[c] += dy(r, c);
      const double dxhat = dy(r, c) * gamma.value[c];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * cache.xhat(r, c);
    }
    for (std::size_t c = 0; c < d; ++c) {
      const double dxhat = dy(r, c) * gamma.value[c];
      dx(r, c) = cache.inv_std[r] / dd * (dd * dxhat - sum_dxhat - cache.xhat(r, c) * sum_dxhat_xhat);
    }
  }
  return dx;
}

void LayerNorm::collect(ParamList& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

Matrix dropout_forward(const Matrix& x, double p, Mode mode, Rng* rng, Matrix* mask) {
  if (mode == Mode::eval || rng == nullptr || p <= 0.0) {
    if (mask) *mask = Matrix();
    return x;
  }
  if (p >= 1.0) fail(ErrorCode::InvalidArgument, "dropout rate must be < 1");
  Matrix m(x.rows(), x.cols());
  Matrix y = x;
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < y.data().size(); ++i) {
    m.data()[i] = rng->uniform() >= p ? scale : 0.0;
    y.data()[i] *= m.data()[i];
  }
  if (mask) *mask = std::move(m);
  return y;
}

Matrix dropout_backward(const Matrix& mask, const Matrix& dy) {
  if (mask.empty()) return dy;
  Matrix dx = dy;
  for (std::size_t i = 0; i < dx.data().size(); ++i) dx.data()[i] *= mask.data()[i];
  return dx;
}

std::vector<double> l2_normalize(std::span<const double> v) {
  const double norm = std::sqrt(dot(v, v));
  if (norm == 0.0) fail(ErrorCode::ZeroVector, "cannot normalize a zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (auto& x : out) x /= norm;
  return out;
}

Matrix normalize_rows(const Matrix& p, double eps, std::vector<double>* norms) {
  Matrix a(p.rows(), p.cols());
  if (norms) norms->assign(p.rows(), 0.0);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto pr = p.row(r);
    const double n = std::sqrt(dot(pr, pr) + eps);
    if (n == 0.0) fail(ErrorCode::ZeroVector, "row " + std::to_string(r), r);
    auto ar = a.row(r);
    for (std::size_t c = 0; c < p.cols(); ++c) ar[c] = pr[c] / n;
    if (norms) (*norms)[r] = n;
  }
  return a;
}

Matrix normalize_rows_backward(const Matrix& p, const std::vector<double>& norms, const Matrix& da) {
  Matrix dp(p.rows(), p.cols());
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto pr = p.row(r);
    auto dar = da.row(r);
    const double n = norms[r];
    const double proj = dot(pr, dar) / (n * n * n);
    auto dpr = dp.row(r);
    for (std::size_t c = 0; c < p.cols(); ++c) dpr[c] = dar[c] / n - pr[c] * proj;
  }
  return dp;
}

}  // namespace onealign
