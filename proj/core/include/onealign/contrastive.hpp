#pragma once

#include "onealign/tensor.hpp"

namespace onealign {

/// Normalization epsilon used under the square root for projections.
inline constexpr double kNormEps = 1e-12;

/// One-directional InfoNCE over unit rows with cross-set negatives only:
///   L = -(1/n) sum_i log softmax_j(a_i . b_j / tau)[i]
/// Throws EmptyBatch, ShapeMismatch, NotNormalized (|‖row‖ - 1| > 1e-5).
double info_nce(const Matrix& a, const Matrix& b, double tau);

/// info_nce(A, B) + info_nce(B, A).
double symmetric_loss(const Matrix& a, const Matrix& b, double tau);

struct LossGrad {
  double loss = 0.0;
  Matrix da;
  Matrix db;
  /// dL / d(log tau)
  double dlog_tau = 0.0;
};

/// Gradient of symmetric_loss with respect to the unit rows themselves.
LossGrad symmetric_loss_grad_unit(const Matrix& a, const Matrix& b, double tau);

/// Gradient of symmetric_loss(norm(PA), norm(PB)) with respect to the raw
/// projections, including the normalization Jacobian (epsilon kNormEps).
LossGrad info_nce_grad(const Matrix& pa, const Matrix& pb, double tau);

/// Throws NotNormalized unless every row has unit norm within tol.
void require_unit_rows(const Matrix& m, double tol = 1e-5);

}  // namespace onealign
