#pragma once

#include <functional>
#include <span>
#include <vector>

#include "onealign/heads.hpp"

namespace onealign {

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central-difference gradient of f at `point` with step h.
std::vector<double> central_difference(const ScalarFn& f, std::span<const double> point, double h = 1e-4);

/// Five-point central stencil: (-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h.
std::vector<double> central_difference5(const ScalarFn& f, std::span<const double> point, double h = 1e-3);

/// max_i |analytic_i - cd_i| / max(|analytic_i|, |cd_i|, 1e-8), with cd the
/// central difference at step h.
double grad_check(const ScalarFn& f, std::span<const double> point,
                  std::span<const double> analytic, double h = 1e-4);

/// Same metric between two precomputed gradients.
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric);

struct HeadPairGrad {
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_rel_error = 0.0;
};

/// Symmetric InfoNCE on two heads' normalized projections: analytic
/// gradients over every trainable parameter of both heads (a first, then b)
/// against five-point central differences. Heads keep their values.
HeadPairGrad head_pair_grad_check(ProjectionHead& a, const HeadInput& in_a, ProjectionHead& b,
                                  const HeadInput& in_b, double tau, double h = 1e-3);

}  // namespace onealign
