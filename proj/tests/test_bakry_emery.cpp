// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "oracles.hpp"

#include "finsler/bakry_emery.hpp"

#include <cmath>
#include <numbers>

using namespace finsler;

namespace {
constexpr double kPi = std::numbers::pi;

WeightedSpec weighted(int dim, std::function<double(const Location&)> f) {
  WeightedSpec w;
  w.riemannian = MetricSpec::euclidean(dim);
  w.weight_f = std::move(f);
  return w;
}
}  // namespace

TEST_CASE("weighted measure") {
  const Mesh c = make_circle(256);
  const auto flat = weighted(1, [](const Location&) { return 0.0; });
  CHECK(weighted_measure(flat).sigma(Location{}) == 1.0);
  CHECK(weighted_measure(flat).kind == MeasureKind::weighted_riemannian);

  const auto w = weighted(1, [](const Location& x) { return 0.5 * std::cos(x.theta); });
  const SparseMatrix M = assemble_mass(c, weighted_measure(w));
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(c.num_dofs);
  // Oracle: 10^6-node periodic trapezoid rule of exp(-0.5 cos t).
  const double mass = oracle::trapezoid_periodic([](double t) { return std::exp(-0.5 * std::cos(t)); }, 1000000);
  CHECK(one.dot(M * one) == doctest::Approx(mass).epsilon(1e-5));
}

TEST_CASE("Bakry-Emery spectra") {
  const Mesh c = make_circle(256);
  const SpectrumReport flat = solve_bakry_emery(c, weighted(1, [](const Location&) { return 0.0; }), 5);
  const double want[] = {0, 1, 1, 4, 4};
  for (int k = 0; k < 5; ++k) CHECK(flat.entries[k].lambda == doctest::Approx(want[k]).epsilon(1e-2).scale(1));

  const auto shifted = weighted(1, [](const Location&) { return 1.7; });
  const SpectrumReport sh = solve_bakry_emery(c, shifted, 5);
  for (int k = 0; k < 5; ++k) CHECK(std::abs(sh.entries[k].lambda - flat.entries[k].lambda) <= 1e-12 * (1 + flat.entries[k].lambda));

  const auto w = weighted(1, [](const Location& x) { return 0.5 * std::cos(x.theta); });
  const SpectrumReport r = solve_bakry_emery(c, w, 5);
  CHECK(std::abs(r.entries[0].lambda) <= 1e-10);
  const Eigen::VectorXd& u0 = r.entries[0].eigenfield.values;
  CHECK((u0.array() - u0(0)).abs().maxCoeff() <= 1e-10);
  // Golden values: Fourier-Galerkin solution of the weighted circle problem.
  CHECK(r.entries[1].lambda == doctest::Approx(1.04159413).epsilon(1e-4));
  CHECK(r.entries[3].lambda == doctest::Approx(4.03335899).epsilon(1e-3));
  // Three-level Richardson oracle agrees with the golden values.
  double lam[3];
  int i = 0;
  for (int n : {64, 128, 256}) lam[i++] = solve_bakry_emery(make_circle(n), w, 2).entries[1].lambda;
  CHECK(oracle::richardson_limit(lam[1], lam[2], 2.0) == doctest::Approx(1.04159413).epsilon(1e-6));
}

TEST_CASE("cross validation against the nonlinear pipeline") {
  const Mesh c = make_circle(256);
  const CrossValidation flat = cross_validate_weighted(c, weighted(1, [](const Location&) { return 0.0; }), 4, {}, 1e-6);
  CHECK(flat.agree);
  const CrossValidation cv = cross_validate_weighted(c, weighted(1, [](const Location& x) { return 0.5 * std::cos(x.theta); }), 4);
  CHECK(cv.agree);
  CHECK(cv.max_relative_difference <= 1e-4);
  const CrossValidation ct = cross_validate_weighted(make_torus(16, 16),
                                                     weighted(2, [](const Location& x) { return 0.3 * std::sin(2 * kPi * x.x); }), 3);
  CHECK(ct.agree);
}

TEST_CASE("Bakry-Emery Ricci") {
  auto w = weighted(2, [](const Location&) { return 0.0; });
  w.N_effective = 3.0;
  CHECK(bakry_emery_ricci(w, BaseGeometry::flat, Location{0.3, 0.4}, {1, 0, 0}) == doctest::Approx(0.0).scale(1e-8));
  const double c = 0.7;
  auto lin = weighted(2, [c](const Location& x) { return c * x.x; });
  lin.N_effective = 3.0;
  CHECK(bakry_emery_ricci(lin, BaseGeometry::flat, Location{0.2, 0.1}, {1, 0, 0}) == doctest::Approx(-c * c).epsilon(1e-6));
  const double s = 1 / std::sqrt(2.0);
  CHECK(bakry_emery_ricci(w, BaseGeometry::round_sphere, Location{0, 0, 1}, {s, s, 0}) == doctest::Approx(1.0).epsilon(1e-8));
  auto bad = w;
  bad.N_effective = 2.0;
  CHECK_THROWS_AS(bakry_emery_ricci(bad, BaseGeometry::flat, Location{}, {1, 0, 0}), InvalidArgument);
  auto none = w;
  none.N_effective.reset();
  CHECK_THROWS_AS(bakry_emery_ricci(none, BaseGeometry::flat, Location{}, {1, 0, 0}), InvalidArgument);
}
