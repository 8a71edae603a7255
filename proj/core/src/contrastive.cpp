#include "onealign/contrastive.hpp"

#include <cmath>

#include "onealign/error.hpp"
#include "onealign/layers.hpp"

namespace onealign {
namespace {

void check_pair(const Matrix& a, const Matrix& b, double tau) {
  if (a.rows() == 0 || b.rows() == 0) fail(ErrorCode::EmptyBatch, "empty batch");
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(ErrorCode::ShapeMismatch, "A and B shapes differ");
  if (!(tau > 0.0) || !std::isfinite(tau)) fail(ErrorCode::InvalidArgument, "temperature must be positive");
}

Matrix similarity(const Matrix& a, const Matrix& b) {
  Matrix s(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) s(i, j) = dot(a.row(i), b.row(j));
  }
  return s;
}

// Row-wise loss of logits s/tau with positives on the diagonal; optionally
// fills the softmax probabilities.
double directional(const Matrix& s, double tau, bool transpose, Matrix* prob) {
  const std::size_t n = s.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto at = [&](std::size_t j) { return (transpose ? s(j, i) : s(i, j)) / tau; };
    double mx = at(0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, at(j));
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(at(j) - mx);
    const double lse = mx + std::log(z);
    total += lse - at(i);
    if (prob) {
      for (std::size_t j = 0; j < n; ++j) {
        const double p = std::exp(at(j) - lse);
        if (transpose) (*prob)(j, i) = p; else (*prob)(i, j) = p;
      }
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace

void require_unit_rows(const Matrix& m, double tol) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double norm = std::sqrt(dot(m.row(i), m.row(i)));
    if (!(std::abs(norm - 1.0) <= tol)) fail(ErrorCode::NotNormalized, "row is not unit length", i);
  }
}

double info_nce(const Matrix& a, const Matrix& b, double tau) {
  check_pair(a, b, tau);
  require_unit_rows(a);
  require_unit_rows(b);
  return directional(similarity(a, b), tau, false, nullptr);
}

double symmetric_loss(const Matrix& a, const Matrix& b, double tau) {
  return info_nce(a, b, tau) + info_nce(b, a, tau);
}

LossGrad symmetric_loss_grad_unit(const Matrix& a, const Matrix& b, double tau) {
  check_pair(a, b, tau);
  require_unit_rows(a);
  require_unit_rows(b);
  const std::size_t n = a.rows();
  const Matrix s = similarity(a, b);
  Matrix p_row(n, n), p_col(n, n);
  LossGrad out;
  out.loss = directional(s, tau, false, &p_row) + directional(s, tau, true, &p_col);

  // g = dL/dlogits
  Matrix g(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double dlt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double delta = i == j ? 1.0 : 0.0;
      g(i, j) = inv_n * ((p_row(i, j) - delta) + (p_col(i, j) - delta));
      dlt -= g(i, j) * s(i, j) / tau;
    }
  }
  out.dlog_tau = dlt;
  out.da = Matrix(n, a.cols());
  out.db = Matrix(n, b.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double gij = g(i, j) / tau;
      if (gij == 0.0) continue;
      axpy(gij, b.row(j), out.da.row(i));
      axpy(gij, a.row(i), out.db.row(j));
    }
  }
  return out;
}

LossGrad info_nce_grad(const Matrix& pa, const Matrix& pb, double tau) {
  check_pair(pa, pb, tau);
  std::vector<double> na, nb;
  const Matrix a = normalize_rows(pa, kNormEps, &na);
  const Matrix b = normalize_rows(pb, kNormEps, &nb);
  LossGrad g = symmetric_loss_grad_unit(a, b, tau);
  g.da = normalize_rows_backward(pa, na, g.da);
  g.db = normalize_rows_backward(pb, nb, g.db);
  return g;
}

}  // namespace onealign
