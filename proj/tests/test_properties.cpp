// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "oracles.hpp"

#include <Eigen/LU>

#include "finsler/bounds.hpp"
#include "finsler/packing.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace finsler;

namespace {

constexpr int kSamples = 100;
constexpr double kPi = std::numbers::pi;

struct Sampler {
  std::mt19937_64 rng;
  explicit Sampler(unsigned long long seed) : rng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  Mat spd() {
    Mat l(2, 2);
    l << uniform(0.5, 2), 0, uniform(-1, 1), uniform(0.5, 2);
    return l * l.transpose();
  }
  Vec vec(double scale = 1.0) {
    Vec v(2);
    do v << uniform(-scale, scale), uniform(-scale, scale);
    while (v.norm() < 1e-3 * scale);
    return v;
  }
  MinkowskiNorm randers(bool symmetrize) {
    const Mat a = spd();
    Vec b = vec();
    const double bn = std::sqrt(b.dot(a.inverse() * b));
    b *= uniform(0.05, 0.8) / bn;
    return MinkowskiNorm::randers(a, b, symmetrize);
  }
};

}  // namespace

TEST_CASE("homogeneity of symmetrized norms") {
  Sampler s(101);
  for (int i = 0; i < kSamples; ++i) {
    const MinkowskiNorm F = s.randers(true);
    const Vec y = s.vec(3);
    const double lam = s.uniform(-5, 5);
    CHECK(std::abs(F(lam * y) - std::abs(lam) * F(y)) <= 1e-12 * (1 + std::abs(lam) * F(y)));
  }
}

TEST_CASE("Euler identity") {
  Sampler s(102);
  for (int i = 0; i < kSamples; ++i) {
    const MinkowskiNorm F = s.randers(i % 2 == 0);
    const Vec y = s.vec(2);
    const Mat G = F.fundamental_tensor(y);
    CHECK(std::abs(y.dot(G * y) - F(y) * F(y)) <= 1e-6 * F(y) * F(y));
    CHECK((G - G.transpose()).norm() <= 1e-12 * G.norm());
    CHECK(G.determinant() > 0);
    CHECK(G.trace() > 0);
  }
}

TEST_CASE("duality round trip") {
  Sampler s(103);
  for (int i = 0; i < kSamples; ++i) {
    const MinkowskiNorm F = s.randers(false);
    const Vec X = s.vec(2);
    const Vec eta = F.legendre(X);
    CHECK(std::abs(F.dual(eta) - F(X)) <= 1e-10 * (1 + F(X)));
    CHECK((F.legendre_inv(eta) - X).norm() <= 1e-8 * (1 + X.norm()));
  }
}

TEST_CASE("average metric sandwich") {
  Sampler s(104);
  for (int i = 0; i < kSamples; ++i) {
    const MinkowskiNorm F = s.randers(false);
    const double lam = uniformity_constant(F, 64);
    const Mat g = average_metric(F, 64);
    const Vec X = s.vec(2);
    const double f2 = F(X) * F(X), gx = X.dot(g * X);
    CHECK(gx >= f2 / lam - 1e-6 * f2);
    CHECK(gx <= lam * f2 + 1e-6 * f2);
  }
}

TEST_CASE("distortion interval") {
  Sampler s(105);
  for (int i = 0; i < kSamples; ++i) {
    const MinkowskiNorm F = s.randers(false);
    const double lam = uniformity_constant(F, 64);
    const auto kind = i % 2 ? MeasureKind::busemann_hausdorff : MeasureKind::holmes_thompson;
    const double e = std::exp(distortion(F, s.vec(), measure_density(F, kind)));
    CHECK(e >= std::pow(lam, -2) * (1 - 1e-6));
    CHECK(e <= std::pow(lam, 2) * (1 + 1e-6));
  }
}

TEST_CASE("Riemannian collapse") {
  Sampler s(106);
  for (int i = 0; i < kSamples; ++i) {
    const Mat a = s.spd();
    const MinkowskiNorm F = MinkowskiNorm::riemannian(a);
    const double v = std::sqrt(a.determinant());
    CHECK(std::abs(measure_density(F, MeasureKind::busemann_hausdorff) - v) <= 1e-10 * v);
    CHECK(std::abs(measure_density(F, MeasureKind::holmes_thompson) - v) <= 1e-10 * v);
    CHECK(std::abs(uniformity_constant(F, 32) - 1.0) <= 1e-9);
  }
}

TEST_CASE("energy homogeneity, null space and Rayleigh scale invariance") {
  const Mesh t = make_torus(6, 6);
  Sampler s(107);
  for (int i = 0; i < kSamples; ++i) {
    const MetricSpec spec = MetricSpec::constant(s.randers(true), "r");
    const FemProblem p(t, spec, canonical_measure(spec, MeasureKind::busemann_hausdorff));
    const Eigen::VectorXd u = oracle::random_field(p.num_dofs(), s.rng);
    const double c = s.uniform(-3, 3);
    const double e = energy_numerator(p, u);
    CHECK(std::abs(energy_numerator(p, c * u) - c * c * e) <= 1e-10 * (1 + c * c * e));
    CHECK(std::abs(rayleigh(p, c * u) - rayleigh(p, u)) <= 1e-13 * rayleigh(p, u));
    CHECK(e > 0);
    CHECK(energy_numerator(p, Eigen::VectorXd::Constant(p.num_dofs(), c)) == 0.0);
  }
}

TEST_CASE("monotone reports and counting bracketing") {
  const MetricSpec spec = MetricSpec::euclidean(2);
  const FemProblem p(make_torus(12, 10, 1.0, 0.8), spec, canonical_measure(spec, MeasureKind::busemann_hausdorff));
  const SpectrumReport r = solve_linear_spectrum(p, 12);
  for (std::size_t k = 1; k < r.entries.size(); ++k) CHECK(r.entries[k].lambda >= r.entries[k - 1].lambda);
  Sampler s(108);
  const double top = r.entries.back().lambda;
  for (int i = 0; i < 20; ++i) {
    const double lam = s.uniform(0, top);
    const int n = counting_function(r, lam);
    if (n > 0) CHECK(r.entries[n - 1].lambda < lam);
    if (n < static_cast<int>(r.entries.size())) CHECK(lam <= r.entries[n].lambda);
  }
}

TEST_CASE("space-form continuity, scaling and monotonicity") {
  for (double r : {0.1, 0.5, 1.0, 2.0}) {
    CHECK(std::abs(s_K(1e-8, r) - r) <= 1e-6);
    CHECK(std::abs(s_K(-1e-8, r) - r) <= 1e-6);
  }
  for (double N : {1.0, 2.0, 3.0}) {
    const double ref = spaceform_ball_eigen(N, 0, 1.0);
    for (double r : {0.25, 0.5, 2.0, 4.0}) CHECK(std::abs(spaceform_ball_eigen(N, 0, r) * r * r - ref) <= 1e-8 * ref);
  }
  for (double K : {-1.0, 0.0, 1.0}) {
    double prev = 1e300;
    for (int i = 1; i <= 12; ++i) {
      const double v = spaceform_ball_eigen(2, K, 0.25 * i);
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("distance symmetry and triangle inequality") {
  Sampler s(109);
  Mat a(2, 2);
  a << 2, 0.3, 0.3, 1;
  Vec b(2);
  b << 0.3, -0.2;
  for (const MetricSpec& spec : {MetricSpec::euclidean(2), MetricSpec::constant(MinkowskiNorm::randers(a, b, true), "r")}) {
    const DistanceOracle o(make_torus(12, 12), spec);
    std::uniform_int_distribution<int> pick(0, o.num_nodes() - 1);
    for (int i = 0; i < 200; ++i) {
      const int p = pick(s.rng), q = pick(s.rng), w = pick(s.rng);
      CHECK(std::abs(o.distance(p, q) - o.distance(q, p)) <= 1e-12);
      CHECK(o.distance(p, w) <= o.distance(p, q) + o.distance(q, w) + 1e-12);
    }
  }
}

TEST_CASE("packing witnesses and region partition") {
  const DistanceOracle c(make_circle(200), MetricSpec::euclidean(1));
  const DistanceOracle t(make_torus(16, 16), MetricSpec::euclidean(2));
  for (const DistanceOracle* o : {&c, &t}) {
    const double d = o->diameter();
    for (double f : {0.07, 0.13, 0.21, 0.34, 0.55}) {
      const double r = f * d;
      const Packing p = complete_r_package(*o, r);
      CHECK(verify_packing(p));
      CHECK(packing_number(*o, r) <= covering_number(*o, r));
      CHECK(covering_number(*o, r) <= packing_number(*o, r / 2));
      std::vector<int> seen(o->num_nodes(), 0);
      for (int i = 0; i < p.num_regions(); ++i)
        for (int v : p.region(i)) ++seen[v];
      for (int v : seen) CHECK(v == 1);
    }
  }
}
