#include "onealign/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "onealign/contrastive.hpp"
#include "onealign/error.hpp"
#include "onealign/heads.hpp"
#include "onealign/layers.hpp"

namespace onealign {

std::vector<double> central_difference(const ScalarFn& f, std::span<const double> point, double h) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    out[i] = (fp - fm) / (2.0 * h);
  }
  return out;
}

std::vector<double> central_difference5(const ScalarFn& f, std::span<const double> point, double h) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> out(x.size());
  auto at = [&](std::size_t i, double orig, double step) {
    x[i] = orig + step;
    return f(x);
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    const double p2 = at(i, orig, 2 * h), p1 = at(i, orig, h), m1 = at(i, orig, -h), m2 = at(i, orig, -2 * h);
    x[i] = orig;
    out[i] = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
  }
  return out;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) fail(ErrorCode::ShapeMismatch, "gradient lengths differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

double grad_check(const ScalarFn& f, std::span<const double> point,
                  std::span<const double> analytic, double h) {
  return max_relative_error(analytic, central_difference(f, point, h));
}

HeadPairGrad head_pair_grad_check(ProjectionHead& a, const HeadInput& in_a, ProjectionHead& b,
                                  const HeadInput& in_b, double tau, double h) {
  ParamList pa = a.params(), pb = b.params();
  ParamList all = pa;
  all.insert(all.end(), pb.begin(), pb.end());
  const auto start = flatten_values(all);

  HeadPairGrad out;
  zero_grads(all);
  ProjectionHead::Cache ca, cb;
  const Matrix xa = a.forward(in_a, Mode::train, nullptr, &ca);
  const Matrix xb = b.forward(in_b, Mode::train, nullptr, &cb);
  const LossGrad lg = info_nce_grad(xa, xb, tau);
  a.backward(in_a, ca, lg.da);
  b.backward(in_b, cb, lg.db);
  out.analytic = flatten_grads(all);

  auto loss = [&](std::span<const double> flat) {
    assign_values(all, flat);
    const Matrix ua = normalize_rows(a.forward(in_a, Mode::train, nullptr, nullptr), kNormEps);
    const Matrix ub = normalize_rows(b.forward(in_b, Mode::train, nullptr, nullptr), kNormEps);
    return symmetric_loss(ua, ub, tau);
  };
  out.numeric = central_difference5(loss, start, h);
  assign_values(all, start);
  out.max_rel_error = max_relative_error(out.analytic, out.numeric);
  return out;
}

}  // namespace onealign
