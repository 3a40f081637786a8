// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "oracles.hpp"

#include "finsler/eigensolver.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace finsler;

namespace {

constexpr double kPi = std::numbers::pi;

FemProblem euclidean_problem(const Mesh& mesh) {
  const MetricSpec s = MetricSpec::euclidean(mesh.dimension);
  return FemProblem(mesh, s, canonical_measure(s, MeasureKind::busemann_hausdorff));
}

MetricSpec sym_randers(double bx, double by) {
  Vec b(2);
  b << bx, by;
  return MetricSpec::constant(MinkowskiNorm::randers(Mat::Identity(2, 2), b, true), "sym-randers");
}

double m_mean(const FemProblem& p, const Eigen::VectorXd& u) { return p.mass_ones().dot(u); }

}  // namespace

TEST_CASE("rayleigh quotient") {
  const Mesh c = make_circle(256);
  const FemProblem p = euclidean_problem(c);
  CHECK(rayleigh(p, Eigen::VectorXd::Ones(p.num_dofs())) == 0.0);
  const Eigen::VectorXd cosv = interpolate(c, [](const Eigen::Vector3d& v) { return std::cos(v.x()); });
  CHECK(rayleigh(p, cosv) == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(std::abs(rayleigh(p, -7.3 * cosv) - rayleigh(p, cosv)) < 1e-14);
  CHECK_THROWS_AS(rayleigh(p, Eigen::VectorXd::Zero(p.num_dofs())), InvalidArgument);
  const Mesh t = make_torus(32, 32);
  const FemProblem pt = euclidean_problem(t);
  const Eigen::VectorXd s = interpolate(t, [](const Eigen::Vector3d& v) { return std::sin(2 * kPi * v.x()); });
  CHECK(rayleigh(pt, s) == doctest::Approx(4 * kPi * kPi).epsilon(1e-2));
}

TEST_CASE("linear spectrum closed forms") {
  const FemProblem c = euclidean_problem(make_circle(256));
  const SpectrumReport r = solve_linear_spectrum(c, 7);
  const double want[] = {0, 1, 1, 4, 4, 9, 9};
  for (int k = 0; k < 7; ++k) CHECK(r.entries[k].lambda == doctest::Approx(want[k]).epsilon(1e-2).scale(1));
  for (const auto& e : r.entries) {
    CHECK(e.residual <= 1e-8);
    CHECK(e.method == SpectrumMethod::linear);
    const Eigen::VectorXd& u = e.eigenfield.values;
    CHECK(u.dot(c.mass() * u) == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK(r.entries[1].cluster == r.entries[2].cluster);
  CHECK(r.multiplicity(r.entries[3].cluster) == 2);

  const FemProblem i = euclidean_problem(make_interval(256));
  CHECK(solve_linear_spectrum(i, 1).entries[0].lambda == doctest::Approx(kPi * kPi).epsilon(1e-2));

  const FemProblem s = euclidean_problem(make_icosphere(4));
  const SpectrumReport rs = solve_linear_spectrum(s, 9);
  CHECK(std::abs(rs.entries[0].lambda) < 1e-8);
  for (int k = 1; k <= 3; ++k) CHECK(rs.entries[k].lambda == doctest::Approx(2.0).epsilon(2e-2));
  for (int k = 4; k <= 8; ++k) CHECK(rs.entries[k].lambda == doctest::Approx(6.0).epsilon(2e-2));
}

TEST_CASE("large pencils use the iterative path consistently") {
  const FemProblem p = euclidean_problem(make_circle(1024));
  const SpectrumReport r = solve_linear_spectrum(p, 5);
  CHECK(r.entries[1].lambda == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.entries[4].lambda == doctest::Approx(4.0).epsilon(1e-4));
  for (const auto& e : r.entries) CHECK(e.residual <= 1e-8);
}

TEST_CASE("ground state") {
  const FemProblem c = euclidean_problem(make_circle(64));
  const EigenResult g = solve_ground(c);
  CHECK(g.lambda == 0.0);
  CHECK(g.residual == 0.0);
  CHECK((g.eigenfield.values.array() - g.eigenfield.values(0)).abs().maxCoeff() < 1e-14);

  // Oracle: j_{0,1}^2 from the J0 series.
  const double j = oracle::j01();
  const FemProblem d = euclidean_problem(make_disk(32));
  const EigenResult gd = solve_ground(d);
  CHECK(gd.lambda == doctest::Approx(j * j).epsilon(1e-2));
  CHECK(gd.residual <= 1e-6 * (1 + gd.lambda));

  const FemProblem i = euclidean_problem(make_interval(256));
  const EigenResult gi = solve_ground(i);
  CHECK(gi.lambda == doctest::Approx(kPi * kPi).epsilon(1e-2));
  CHECK(gi.lambda == doctest::Approx(solve_linear_spectrum(i, 1).entries[0].lambda).epsilon(1e-6));
}

TEST_CASE("first positive eigenvalue") {
  const FemProblem c = euclidean_problem(make_circle(256));
  const EigenResult r = solve_first_positive(c);
  CHECK(r.lambda == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(std::abs(m_mean(c, r.eigenfield.values)) <= 1e-10);
  CHECK(r.lambda == doctest::Approx(solve_linear_spectrum(c, 2).entries[1].lambda).epsilon(1e-6));

  const FemProblem t = euclidean_problem(make_torus(24, 24));
  const EigenResult rt = solve_first_positive(t);
  CHECK(rt.lambda == doctest::Approx(4 * kPi * kPi).epsilon(1e-2));
  CHECK(rt.lambda == doctest::Approx(solve_linear_spectrum(t, 2).entries[1].lambda).epsilon(1e-6));

  CHECK_THROWS_AS(solve_first_positive(euclidean_problem(make_interval(16))), InvalidArgument);
}

TEST_CASE("symmetrized Randers torus against a self-convergence oracle") {
  // The reversible part of a = I, |b| = 0.3 is the Euclidean norm, whose first
  // positive value on the unit torus is 4 pi^2; three levels fix the limit.
  double lam[3];
  const int n[3] = {8, 16, 32};
  for (int i = 0; i < 3; ++i) {
    const MetricSpec spec = sym_randers(0.3, 0.0);
    const FemProblem p(make_torus(n[i], n[i]), spec, canonical_measure(spec, MeasureKind::busemann_hausdorff));
    CHECK_FALSE(p.quadratic());
    lam[i] = solve_first_positive(p).lambda;
  }
  const double order = oracle::richardson_order(lam[0], lam[1], lam[2]);
  CHECK(order == doctest::Approx(2.0).epsilon(0.15));
  const double limit = oracle::richardson_limit(lam[1], lam[2], 2.0);
  // Golden value frozen from the extrapolated limit.
  CHECK(limit == doctest::Approx(39.4784176).epsilon(1e-3));
  CHECK(lam[2] == doctest::Approx(limit).epsilon(1e-2));
}

TEST_CASE("nonlinear higher values") {
  const FemProblem c = euclidean_problem(make_circle(256));
  const SpectrumReport r = solve_nonlinear_higher(c, 5);
  const SpectrumReport lin = solve_linear_spectrum(c, 5);
  REQUIRE(r.entries.size() == 5);
  for (int k = 0; k < 5; ++k) {
    CHECK(r.entries[k].lambda == doctest::Approx(lin.entries[k].lambda).epsilon(1e-6).scale(1.0));
    CHECK(r.entries[k].residual <= 1e-6 * (1 + r.entries[k].lambda));
    CHECK_FALSE(r.entries[k].upper_bound_candidate);
  }

  const MetricSpec spec = sym_randers(0.3, 0.1);
  const FemProblem t(make_torus(12, 12), spec, canonical_measure(spec, MeasureKind::busemann_hausdorff));
  const SpectrumReport rt = solve_nonlinear_higher(t, 3);
  REQUIRE(rt.entries.size() == 3);
  const double zero_mean = solve_first_positive(t).lambda;
  for (int k = 0; k < 3; ++k) {
    CHECK(rt.entries[k].upper_bound_candidate);
    CHECK(rt.entries[k].residual < 1e-6 * (1 + rt.entries[k].lambda));
    if (k > 0) {
      CHECK(rt.entries[k].lambda >= rt.entries[k - 1].lambda);
      CHECK(rt.entries[k].lambda >= zero_mean * (1 - 1e-8));
    }
  }
}

TEST_CASE("weak residual") {
  const Mesh c = make_circle(64);
  const FemProblem p = euclidean_problem(c);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(p.num_dofs()) / std::sqrt(2 * kPi);
  CHECK(weak_residual(p, one, 0.0) == doctest::Approx(0.0).scale(1e-14));
  const SpectrumReport r = solve_linear_spectrum(p, 3);
  CHECK(weak_residual(p, r.entries[1].eigenfield.values, r.entries[1].lambda) <= 1e-8);
  double prev = 1e300;
  for (int n : {64, 128, 256}) {
    const Mesh m = make_circle(n);
    const FemProblem q = euclidean_problem(m);
    Eigen::VectorXd u = interpolate(m, [](const Eigen::Vector3d& v) { return std::cos(v.x()); });
    u /= std::sqrt(u.dot(q.mass() * u));
    const double res = weak_residual(q, u, 1.0);
    CHECK(res <= 1e-3);
    CHECK(res < prev);
    prev = res;
  }
}

TEST_CASE("counting function") {
  SpectrumReport r;
  for (double l : {0.0, 1.0, 1.0, 4.0, 4.0}) {
    SpectrumEntry e;
    e.lambda = l;
    r.entries.push_back(e);
  }
  CHECK(counting_function(r, 2.0) == 3);
  CHECK(counting_function(r, 0.0) == 0);
  CHECK(counting_function(r, 0.5) == 1);
}

TEST_CASE("report serialization") {
  const FemProblem c = euclidean_problem(make_circle(32));
  const SpectrumReport r = solve_linear_spectrum(c, 3);
  std::ostringstream csv;
  write_spectrum_csv(csv, r);
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "k,lambda,residual,multiplicity_cluster,method");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 3);
  const std::string json = spectrum_to_json(r, true);
  CHECK(json.find("\"eigenfield\"") != std::string::npos);
  CHECK(spectrum_to_json(r, false).find("\"eigenfield\"") == std::string::npos);
}

TEST_CASE("solver config validation") {
  SolverConfig c;
  c.restarts = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = SolverConfig{};
  c.descent_tolerance = -1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}
