// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "oracles.hpp"

#include "finsler/bounds.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

using namespace finsler;

namespace {
constexpr double kPi = std::numbers::pi;

CurvatureAssumption assumption(double N, double K, double d, int n) {
  CurvatureAssumption a;
  a.N = N;
  a.K = K;
  a.d = d;
  a.n = n;
  return a;
}
}  // namespace

TEST_CASE("space-form functions") {
  CHECK(s_K(0.0, 1.7) == 1.7);
  CHECK(s_K(1.0, kPi / 2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s_K(-1.0, 1.0) == doctest::Approx(std::sinh(1.0)).epsilon(1e-14));
  CHECK(V_nK(2, 0.0, 1.3) == doctest::Approx(kPi * 1.3 * 1.3).epsilon(1e-12));
  CHECK(A_nK(3, 0.0, 0.7) == doctest::Approx(4 * kPi * 0.49).epsilon(1e-12));
  CHECK(unit_sphere_volume(2) == doctest::Approx(2 * kPi).epsilon(1e-14));
  // The ball of radius pi/2 in the unit sphere S^2 has area 2 pi.
  CHECK(V_nK(3, 1.0, kPi / 2) == doctest::Approx(kPi * kPi).epsilon(1e-10));
}

TEST_CASE("ball eigenvalues") {
  for (double r : {0.5, 1.0, 2.0}) CHECK(spaceform_ball_eigen(1, 0, r) == doctest::Approx(std::pow(kPi / (2 * r), 2)).epsilon(1e-8));
  const double j = oracle::j01();
  CHECK(spaceform_ball_eigen(2, 0, 1) == doctest::Approx(j * j).epsilon(1e-8));
  // phi = cos r solves the K = 1 radial problem on the hemisphere with lambda = 2.
  CHECK(spaceform_ball_eigen(2, 1, kPi / 2) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK_THROWS_AS(spaceform_ball_eigen(2, 1, 4.0), InvalidArgument);
  CHECK_THROWS_AS(spaceform_ball_eigen(2, 0, -1.0), InvalidArgument);
}

TEST_CASE("hyperbolic ball against an independent shooting oracle") {
  // N = 3, K = -1: u = r phi turns the radial equation into u'' + (lambda - 1) u = 0, so lambda = 1 + (pi/r)^2.
  CHECK(spaceform_ball_eigen(3, -1, 1.0) == doctest::Approx(1 + kPi * kPi).epsilon(1e-8));
}

TEST_CASE("Cheng bound") {
  CHECK(cheng_bound(assumption(1, 0, 2 * kPi, 1), 1) == doctest::Approx(0.25).epsilon(1e-8));
  const double j = oracle::j01();
  CHECK(cheng_bound(assumption(2, 0, 2, 2), 1) == doctest::Approx(j * j).epsilon(1e-8));
  const auto a = assumption(2, 0, 1, 2);
  for (int k = 1; k < 6; ++k) CHECK(cheng_bound(a, k + 1) > cheng_bound(a, k));
  CHECK_THROWS_AS(cheng_bound(assumption(2.5, 0, 1, 2), 1), InvalidArgument);
  CHECK_THROWS_AS(cheng_bound(a, 0), InvalidArgument);
}

TEST_CASE("Cheeger lower expression") {
  CHECK(cheeger_lower_expression(2 / kPi, 1, 1, 1) == doctest::Approx(1 / (kPi * kPi)).epsilon(1e-14));
  CHECK(cheeger_lower_expression(0, 1, 1, 2) == 0.0);
  CHECK(cheeger_lower_expression(1, 2, 1, 2) == doctest::Approx(1.0 / 32).epsilon(1e-14));
  CHECK_THROWS_AS(cheeger_lower_expression(1, 0.5, 1, 2), InvalidArgument);
}

TEST_CASE("bound checks") {
  // Circle canonical, d = pi: bound for k = 1 is exactly 1.
  const auto a = assumption(1, 0, kPi, 1);
  BoundReport r = check_bounds(std::vector<double>{1.00005, 1.00005, 4.0008}, a, 3, 0.02);
  REQUIRE(r.records.size() == 3);
  CHECK(r.records[0].upper_bound == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.all_satisfied());
  CHECK(std::isnan(r.records[0].lower_bound_expression));
  r = check_bounds(std::vector<double>{1.5, 2.0}, a, 2, 0.02);
  CHECK_FALSE(r.records[0].satisfied);
  CHECK_FALSE(r.all_satisfied());
  const LowerIndication low{2, 0.1, 4.0};
  r = check_bounds(std::vector<double>{1.0, 1.0}, a, 2, 0.02, low);
  CHECK(r.records[1].lower_bound_expression == 0.1);
  CHECK(r.records[1].lower_ok);
  r = check_bounds(std::vector<double>{1.0, 0.01}, a, 2, 0.02, low);
  CHECK_FALSE(r.records[1].lower_ok);
  std::ostringstream csv;
  write_bound_csv(csv, r);
  CHECK(csv.str().rfind("k,computed_lambda,upper_bound,lower_bound_expression,satisfied\n", 0) == 0);
}

TEST_CASE("flat torus Cheng checks") {
  const MetricSpec s = MetricSpec::euclidean(2);
  const FemProblem p(make_torus(24, 24), s, canonical_measure(s, MeasureKind::busemann_hausdorff));
  const SpectrumReport rep = solve_linear_spectrum(p, 6);
  const BoundReport br = check_bounds(rep, assumption(2, 0, std::sqrt(2.0) / 2, 2), 5, 0.02);
  CHECK(br.records.size() == 5);
  CHECK(br.all_satisfied());
}

TEST_CASE("curvature assumption validation") {
  auto a = assumption(1, 0, 1, 2);
  CHECK_THROWS_AS(a.validate(), InvalidArgument);
  a = assumption(2, 0, 1, 2);
  a.Theta = 0.5;
  CHECK_THROWS_AS(a.validate(), InvalidArgument);
}
