// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "oracles.hpp"

#include <Eigen/LU>

#include "finsler/metric.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace finsler;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

const MinkowskiNorm kRaw = MinkowskiNorm::randers(Mat::Identity(2, 2), v2(0.5, 0), false);

}  // namespace

TEST_CASE("eval_norm closed forms") {
  CHECK(MinkowskiNorm::euclidean(2)(v2(3, 4)) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(kRaw(v2(1, 0)) == doctest::Approx(1.5).epsilon(1e-15));
  const auto sym = MinkowskiNorm::randers(Mat::Identity(2, 2), v2(0.5, 0), true);
  CHECK(sym(v2(1, 0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(MinkowskiNorm::riemannian(m2(4, 0, 0, 1))(v2(1, 1)) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
  CHECK(kRaw(v2(0, 0)) == 0.0);
}

TEST_CASE("eval_norm rejects non-finite input") {
  CHECK_THROWS_AS(kRaw(v2(std::numeric_limits<double>::quiet_NaN(), 0)), InvalidArgument);
  CHECK_THROWS_AS(MinkowskiNorm::euclidean(2)(v2(std::numeric_limits<double>::infinity(), 1)), InvalidArgument);
}

TEST_CASE("constructors validate their data") {
  CHECK_THROWS_AS(MinkowskiNorm::riemannian(m2(1, 0, 0, -1)), InvalidArgument);
  CHECK_THROWS_AS(MinkowskiNorm::riemannian(m2(1, 0.5, 0, 1)), InvalidArgument);
  CHECK_THROWS_AS(MinkowskiNorm::randers(Mat::Identity(2, 2), v2(1.0, 0), false), InvalidArgument);
}

TEST_CASE("fundamental tensor") {
  CHECK(MinkowskiNorm::euclidean(2).fundamental_tensor(v2(0.3, -2)).isApprox(Mat::Identity(2, 2), 1e-7));
  const Mat a = m2(2, 0.3, 0.3, 1);
  CHECK(MinkowskiNorm::riemannian(a).fundamental_tensor(v2(1, 2)).isApprox(a, 1e-12));
  const Mat G = kRaw.fundamental_tensor(v2(1, 0));
  const Eigen::Matrix2d ref = oracle::randers_tensor_identity_a({0.5, 0}, {1, 0});
  CHECK((Eigen::Matrix2d(G) - ref).cwiseAbs().maxCoeff() < 1e-6);
  const Vec y = v2(1, 0);
  CHECK(y.dot(G * y) == doctest::Approx(2.25).epsilon(1e-6));
  CHECK_THROWS_AS(kRaw.fundamental_tensor(v2(0, 0)), SingularityError);
  CHECK(MinkowskiNorm::euclidean(2).fundamental_tensor(v2(0, 0)).isApprox(Mat::Identity(2, 2)));
}

TEST_CASE("dual norm") {
  CHECK(MinkowskiNorm::euclidean(2).dual(v2(3, 4)) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(MinkowskiNorm::riemannian(m2(4, 0, 0, 1)).dual(v2(1, 0)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(kRaw.dual(v2(1, 0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  // Oracle: dense angular maximization of cos t / (1 + 0.5 cos t).
  double best = 0;
  for (int i = 0; i < 200000; ++i) {
    const double t = 2 * std::numbers::pi * i / 200000;
    best = std::max(best, std::cos(t) / (1 + 0.5 * std::cos(t)));
  }
  CHECK(kRaw.dual(v2(1, 0)) >= best - 1e-12);
}

TEST_CASE("Legendre transform") {
  CHECK(MinkowskiNorm::euclidean(2).legendre(v2(1, 2)).isApprox(v2(1, 2)));
  const Mat a = m2(2, 0.3, 0.3, 1);
  CHECK(MinkowskiNorm::riemannian(a).legendre(v2(1, 2)).isApprox(a * v2(1, 2), 1e-12));
  CHECK(kRaw.legendre(v2(0, 0)).isZero());
  const Vec eta = kRaw.legendre(v2(1, 0));
  CHECK(kRaw.dual(eta) == doctest::Approx(1.5).epsilon(1e-10));
  CHECK((kRaw.legendre_inv(eta) - v2(1, 0)).norm() < 1e-8);
}

TEST_CASE("uniformity constant") {
  CHECK(uniformity_constant(MinkowskiNorm::riemannian(m2(3, 1, 1, 2)), 64) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(uniformity_constant(MinkowskiNorm::euclidean(2), 64) == doctest::Approx(1.0));
  // Golden value: dense sampling oracle at 360/720/1440 directions, ((1 + |b|) / (1 - |b|))^2.
  CHECK(uniformity_constant(kRaw, 720) == doctest::Approx(9.0).epsilon(1e-3));
  CHECK(uniformity_constant(kRaw, 16) <= uniformity_constant(kRaw, 32) + 1e-12);
  CHECK_THROWS_AS(uniformity_constant(kRaw, 4), InvalidArgument);
}

TEST_CASE("average metric") {
  CHECK(average_metric(MinkowskiNorm::euclidean(2)).isApprox(Mat::Identity(2, 2), 1e-12));
  const Mat a = m2(2, 0.3, 0.3, 1);
  CHECK(average_metric(MinkowskiNorm::riemannian(a)).isApprox(a, 1e-12));
  const Mat g = average_metric(kRaw, 128);
  CHECK((g - g.transpose()).norm() < 1e-12);
  const double lam = uniformity_constant(kRaw, 128);
  for (int i = 0; i < 360; ++i) {
    const double t = 2 * std::numbers::pi * i / 360;
    const Vec x = v2(std::cos(t), std::sin(t));
    const double f2 = kRaw(x) * kRaw(x);
    const double gx = x.dot(g * x);
    CHECK(gx >= f2 / lam - 1e-6);
    CHECK(gx <= lam * f2 + 1e-6);
  }
}

TEST_CASE("measure densities") {
  for (auto kind : {MeasureKind::busemann_hausdorff, MeasureKind::holmes_thompson})
    CHECK(measure_density(MinkowskiNorm::euclidean(2), kind) == doctest::Approx(1.0).epsilon(1e-10));
  const Mat a = m2(2, 0.3, 0.3, 1);
  CHECK(measure_density(MinkowskiNorm::riemannian(a), MeasureKind::busemann_hausdorff) ==
        doctest::Approx(std::sqrt(a.determinant())).epsilon(1e-10));
  // Golden value: 10^6-node polar quadrature of the Randers unit disk, pi / area = (1 - 0.25)^{3/2}.
  CHECK(measure_density(kRaw, MeasureKind::busemann_hausdorff) == doctest::Approx(0.649519052838329).epsilon(1e-8));
  // Same quadrature oracle for the Holmes-Thompson integral.
  CHECK(measure_density(kRaw, MeasureKind::holmes_thompson) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("distortion") {
  const Mat a = m2(2, 0.3, 0.3, 1);
  const auto r = MinkowskiNorm::riemannian(a);
  CHECK(distortion(r, v2(1, -1), std::sqrt(a.determinant())) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(distortion(MinkowskiNorm::euclidean(2), v2(1, 2), 1.0) == doctest::Approx(0.0));
  const double lam = uniformity_constant(kRaw, 360);
  for (auto kind : {MeasureKind::busemann_hausdorff, MeasureKind::holmes_thompson}) {
    const double sigma = measure_density(kRaw, kind);
    for (int i = 0; i < 360; ++i) {
      const double t = 2 * std::numbers::pi * i / 360;
      const double e = std::exp(distortion(kRaw, v2(std::cos(t), std::sin(t)), sigma));
      CHECK(e >= std::pow(lam, -2) - 1e-6);
      CHECK(e <= std::pow(lam, 2) + 1e-6);
    }
  }
}

TEST_CASE("measure kind names") {
  CHECK(measure_kind_from_string("bh") == MeasureKind::busemann_hausdorff);
  CHECK(measure_kind_from_string("holmes_thompson") == MeasureKind::holmes_thompson);
  CHECK_THROWS_AS(measure_kind_from_string("lebesgue"), InvalidArgument);
}
