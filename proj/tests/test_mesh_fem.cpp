// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "oracles.hpp"

#include "finsler/fem.hpp"

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

MetricSpec raw_randers_varying() {
  MetricSpec s;
  s.dimension = 2;
  s.id = "randers-varying";
  s.field = [](const Location& x) {
    Mat a(2, 2);
    a << 1.0 + 0.3 * std::sin(2 * kPi * x.x), 0.1, 0.1, 1.0;
    Vec b(2);
    b << 0.3 * std::cos(2 * kPi * x.y), 0.2;
    return MinkowskiNorm::randers(a, b, false);
  };
  return s;
}

}  // namespace

TEST_CASE("mesh combinatorics") {
  const Mesh c = make_circle(4);
  CHECK(c.num_nodes == 4);
  CHECK(c.elements.size() == 4);
  CHECK(c.boundary_vertices.empty());
  const Mesh i = make_interval(4);
  CHECK(i.vertices.size() == 5);
  CHECK(i.boundary_vertices.size() == 2);
  CHECK(i.num_dofs == 3);
  const Mesh s = make_icosphere(0);
  CHECK(s.num_nodes == 12);
  CHECK(s.elements.size() == 20);
  const Mesh t = make_torus(5, 4);
  CHECK(t.num_nodes == 20);
  CHECK(t.closed());
  CHECK_FALSE(make_disk(4).closed());
}

TEST_CASE("degenerate resolutions are rejected") {
  CHECK_THROWS_AS(make_circle(2), InvalidArgument);
  CHECK_THROWS_AS(make_interval(1), InvalidArgument);
  CHECK_THROWS_AS(make_torus(2, 5), InvalidArgument);
  CHECK_THROWS_AS(make_icosphere(-1), InvalidArgument);
  CHECK_THROWS_AS(mesh_model_from_string("klein"), InvalidArgument);
}

TEST_CASE("plain-text mesh round trip") {
  const Mesh t = make_torus(4, 3, 1.0, 2.0);
  std::stringstream ss;
  write_mesh(ss, t);
  const Mesh r = read_mesh(ss);
  CHECK(r.num_nodes == t.num_nodes);
  CHECK(r.elements.size() == t.elements.size());
  const FemProblem a = euclidean_problem(t), b = euclidean_problem(r);
  CHECK((Eigen::MatrixXd(a.stiffness()) - Eigen::MatrixXd(b.stiffness())).norm() < 1e-12);
  std::istringstream bad("finsler-mesh 1\ndimension 3\n");
  CHECK_THROWS_AS(read_mesh(bad), InvalidArgument);
}

TEST_CASE("mass matrix totals") {
  const Mesh c = make_circle(64);
  const MetricSpec s = MetricSpec::euclidean(1);
  const SparseMatrix M = assemble_mass(c, canonical_measure(s, MeasureKind::busemann_hausdorff));
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(c.num_dofs);
  CHECK(one.dot(M * one) == doctest::Approx(2 * kPi).epsilon(1e-12));
  const Mesh t = make_torus(8, 8);
  const SparseMatrix Mt = assemble_mass(t, canonical_measure(MetricSpec::euclidean(2), MeasureKind::busemann_hausdorff));
  const Eigen::VectorXd onet = Eigen::VectorXd::Ones(t.num_dofs);
  CHECK(std::abs(onet.dot(Mt * onet) - 1.0) < 1e-10);
  // Refinement oracle: the inscribed polyhedra approach 4 pi from below.
  double prev = 0;
  for (int level = 2; level <= 4; ++level) {
    const Mesh s2 = make_icosphere(level);
    const SparseMatrix Ms = assemble_mass(s2, canonical_measure(MetricSpec::euclidean(2), MeasureKind::busemann_hausdorff));
    const Eigen::VectorXd o = Eigen::VectorXd::Ones(s2.num_dofs);
    const double area = o.dot(Ms * o);
    CHECK(area > prev);
    prev = area;
  }
  CHECK(prev == doctest::Approx(4 * kPi).epsilon(5e-3));
  MeasureDensity neg = custom_measure([](const Location&) { return -1.0; }, "negative");
  CHECK_THROWS_AS(assemble_mass(c, neg), NumericFailure);
}

TEST_CASE("energy numerator analytic integrals") {
  const Mesh c = make_circle(256);
  const FemProblem pc = euclidean_problem(c);
  CHECK(energy_numerator(pc, Eigen::VectorXd::Constant(c.num_dofs, 3.0)) == 0.0);
  const Eigen::VectorXd cosv = interpolate(c, [](const Eigen::Vector3d& v) { return std::cos(v.x()); });
  CHECK(energy_numerator(pc, cosv) == doctest::Approx(kPi).epsilon(1e-2));
  const Mesh t = make_torus(32, 32);
  const FemProblem pt = euclidean_problem(t);
  const Eigen::VectorXd s = interpolate(t, [](const Eigen::Vector3d& v) { return std::sin(2 * kPi * v.x()); });
  CHECK(energy_numerator(pt, s) == doctest::Approx(2 * kPi * kPi).epsilon(1e-2));
}

TEST_CASE("energy gradient") {
  const Mesh c = make_circle(64);
  const FemProblem pc = euclidean_problem(c);
  CHECK(energy_gradient(pc, Eigen::VectorXd::Constant(c.num_dofs, 1.0)).isZero(0.0));
  const Eigen::VectorXd cosv = interpolate(c, [](const Eigen::Vector3d& v) { return std::cos(v.x()); });
  const Eigen::VectorXd g = energy_gradient(pc, cosv);
  const Eigen::VectorXd fd = oracle::fd_gradient([&](const Eigen::VectorXd& w) { return energy_numerator(pc, w); }, cosv, 1e-5);
  CHECK((g - fd).cwiseAbs().maxCoeff() / (1 + fd.cwiseAbs().maxCoeff()) < 1e-5);
  CHECK((g - 2.0 * (pc.stiffness() * cosv)).norm() < 1e-8 * (1 + g.norm()));
}

TEST_CASE("energy gradient on non-quadratic metrics") {
  const Mesh t = make_torus(6, 6);
  std::mt19937_64 rng(11);
  for (const MetricSpec& spec : {sym_randers(0.3, 0.1), raw_randers_varying()}) {
    const FemProblem p(t, spec, canonical_measure(spec, MeasureKind::busemann_hausdorff));
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd u = oracle::random_field(p.num_dofs(), rng);
      const Eigen::VectorXd g = energy_gradient(p, u);
      const Eigen::VectorXd fd = oracle::fd_gradient([&](const Eigen::VectorXd& w) { return energy_numerator(p, w); }, u, 1e-6);
      CHECK((g - fd).cwiseAbs().maxCoeff() / (1 + fd.cwiseAbs().maxCoeff()) < 1e-5);
    }
  }
}

TEST_CASE("Riemannian reduction and homogeneity") {
  const Mesh t = make_torus(6, 5);
  Mat a(2, 2);
  a << 2.0, 0.4, 0.4, 1.0;
  const MetricSpec spec = MetricSpec::constant(MinkowskiNorm::riemannian(a), "aniso");
  const FemProblem p(t, spec, canonical_measure(spec, MeasureKind::busemann_hausdorff));
  std::mt19937_64 rng(3);
  const Eigen::VectorXd u = oracle::random_field(p.num_dofs(), rng);
  const double e = energy_numerator(p, u);
  CHECK(std::abs(e - u.dot(p.stiffness() * u)) < 1e-10 * (1 + e));
  const FemProblem pr(t, sym_randers(0.2, -0.3), canonical_measure(sym_randers(0.2, -0.3), MeasureKind::holmes_thompson));
  const double er = energy_numerator(pr, u);
  CHECK(std::abs(energy_numerator(pr, -2.5 * u) - 6.25 * er) < 1e-10 * er);
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS_AS(FemProblem(make_circle(8), MetricSpec::euclidean(2),
                             canonical_measure(MetricSpec::euclidean(2), MeasureKind::busemann_hausdorff)),
                  InvalidArgument);
}
