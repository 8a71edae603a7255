#include <cmath>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "onealign/contrastive.hpp"
#include "onealign/error.hpp"
#include "onealign/gradcheck.hpp"
#include "oracles.hpp"

using namespace onealign;

namespace {

Matrix eye(std::size_t n) {
  Matrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double norm(const Matrix& m) { return std::sqrt(dot(m.data(), m.data())); }

}  // namespace

TEST(InfoNce, Anchors) {
  Matrix one(1, 4, 0.0);
  one(0, 2) = 1.0;
  EXPECT_EQ(info_nce(one, one, 1.0), 0.0);
  EXPECT_NEAR(info_nce(eye(2), eye(2), 1.0), -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0)), 1e-12);
  EXPECT_NEAR(info_nce(eye(2), eye(2), 1.0), 0.313262, 1e-6);
}

TEST(InfoNce, RandomBatchNearLogN) {
  Rng rng(1);
  double mean = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double l = info_nce(gen::unit_rows(256, 64, rng), gen::unit_rows(256, 64, rng), 1.0);
    EXPECT_NEAR(l, std::log(256.0), 0.2);
    mean += l / 100.0;
  }
  EXPECT_NEAR(mean, std::log(256.0), 0.2);
}

TEST(InfoNce, MatchesDirectFormula) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + rng.below(12), d = 1 + rng.below(8);
    const Matrix a = gen::unit_rows(n, d, rng), b = gen::unit_rows(n, d, rng);
    const double tau = 0.05 + rng.uniform();
    EXPECT_NEAR(info_nce(a, b, tau), oracle::info_nce(gen::grid(a), gen::grid(b), tau), 1e-10);
  }
}

TEST(InfoNce, LargeLogitsStayFinite) {
  Rng rng(3);
  const Matrix a = gen::unit_rows(8, 4, rng);
  EXPECT_TRUE(std::isfinite(symmetric_loss(a, a, 1e-4)));
}

TEST(SymmetricLoss, IsSumOfDirections) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = gen::unit_rows(8, 5, rng), b = gen::unit_rows(8, 5, rng);
    EXPECT_NEAR(symmetric_loss(a, b, 1.0), info_nce(a, b, 1.0) + info_nce(b, a, 1.0), 1e-12);
  }
}

TEST(InfoNce, Errors) {
  Rng rng(5);
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code([] { info_nce(Matrix(0, 3), Matrix(0, 3), 1.0); }), ErrorCode::EmptyBatch);
  EXPECT_EQ(code([&] { info_nce(gen::unit_rows(3, 4, rng), gen::unit_rows(2, 4, rng), 1.0); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code([&] { info_nce(gen::normal_matrix(3, 4, rng, 3.0), gen::unit_rows(3, 4, rng), 1.0); }),
            ErrorCode::NotNormalized);
  EXPECT_EQ(code([&] { info_nce(gen::unit_rows(3, 4, rng), gen::unit_rows(3, 4, rng), 0.0); }), ErrorCode::InvalidArgument);
}

TEST(InfoNceGrad, RawProjectionsMatchFiniteDifferences) {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 4, l = 8;
    const Matrix pa = gen::normal_matrix(n, l, rng), pb = gen::normal_matrix(n, l, rng);
    const double tau = 0.2 + rng.uniform();
    const LossGrad g = info_nce_grad(pa, pb, tau);
    std::vector<double> point = pa.data();
    point.insert(point.end(), pb.data().begin(), pb.data().end());
    std::vector<double> analytic = g.da.data();
    analytic.insert(analytic.end(), g.db.data().begin(), g.db.data().end());
    auto f = [&](std::span<const double> p) {
      Matrix a(n, l), b(n, l);
      std::copy(p.begin(), p.begin() + n * l, a.data().begin());
      std::copy(p.begin() + n * l, p.end(), b.data().begin());
      return symmetric_loss(normalize_rows(a, kNormEps), normalize_rows(b, kNormEps), tau);
    };
    EXPECT_LT(grad_check(f, point, analytic), 1e-4);
    EXPECT_NEAR(g.loss, f(point), 1e-12);

    // d/dlog(tau)
    auto ft = [&](std::span<const double> lt) {
      return symmetric_loss(normalize_rows(pa, kNormEps), normalize_rows(pb, kNormEps), std::exp(lt[0]));
    };
    std::vector<double> lt{std::log(tau)};
    EXPECT_LT(max_relative_error(std::vector<double>{g.dlog_tau}, central_difference5(ft, lt)), 1e-7);
  }
}

TEST(InfoNceGrad, SaturatesForAlignedOrthonormalRows) {
  const Matrix a = eye(4);
  const double g1 = norm(symmetric_loss_grad_unit(a, a, 1.0).da);
  const double g01 = norm(symmetric_loss_grad_unit(a, a, 0.1).da);
  EXPECT_LT(g01, g1);
}

TEST(SymmetricLoss, Properties) {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(10), d = 1 + rng.below(6);
    const Matrix a = gen::unit_rows(n, d, rng), b = gen::unit_rows(n, d, rng);
    const double tau = 0.05 + rng.uniform();
    const double l = symmetric_loss(a, b, tau);
    EXPECT_EQ(l, symmetric_loss(b, a, tau));
    EXPECT_GE(info_nce(a, b, tau), -1e-12);
    if (n == 1) {
      EXPECT_EQ(l, 0.0);
    }

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    Matrix pa(n, d), pb(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(a.row(perm[i]).begin(), a.row(perm[i]).end(), pa.row(i).begin());
      std::copy(b.row(perm[i]).begin(), b.row(perm[i]).end(), pb.row(i).begin());
    }
    EXPECT_NEAR(symmetric_loss(pa, pb, tau), l, 1e-12);
  }
}

TEST(InfoNceGrad, SingleIdenticalPairHasZeroGradient) {
  Rng rng(8);
  const Matrix p = gen::normal_matrix(1, 5, rng);
  const LossGrad g = info_nce_grad(p, p, 1.0);
  EXPECT_EQ(g.loss, 0.0);
  for (double v : g.da.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.db.data()) EXPECT_EQ(v, 0.0);
}

TEST(InfoNceGrad, SmallerTemperatureLargerInitialGradient) {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = gen::unit_rows(16, 8, rng), b = gen::unit_rows(16, 8, rng);
    EXPECT_GT(norm(symmetric_loss_grad_unit(a, b, 0.1).da), norm(symmetric_loss_grad_unit(a, b, 1.0).da));
  }
}
