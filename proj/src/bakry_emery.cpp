// SPDX-License-Identifier: Apache-2.0
#include "finsler/bakry_emery.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace finsler {

namespace {

double weight_at(const WeightedSpec& spec, const Location& x) {
  const double f = spec.weight_f(x);
  if (!std::isfinite(f)) throw InvalidArgument("weight f is not finite");
  return f;
}

Location shifted(Location x, int axis, double h) {
  if (axis == 0) x.x += h;
  if (axis == 1) x.y += h;
  if (axis == 2) x.z += h;
  return x;
}

// Gradient and Hessian of f in `dim` ambient coordinates by central differences.
void derivatives(const WeightedSpec& spec, const Location& x, int dim, Eigen::Vector3d& grad, Eigen::Matrix3d& hess) {
  const double h = 1e-4;
  grad.setZero();
  hess.setZero();
  const double f0 = weight_at(spec, x);
  for (int i = 0; i < dim; ++i) {
    const double fp = weight_at(spec, shifted(x, i, h)), fm = weight_at(spec, shifted(x, i, -h));
    grad(i) = (fp - fm) / (2 * h);
    hess(i, i) = (fp - 2 * f0 + fm) / (h * h);
    for (int j = 0; j < i; ++j) {
      const double fpp = weight_at(spec, shifted(shifted(x, i, h), j, h));
      const double fpm = weight_at(spec, shifted(shifted(x, i, h), j, -h));
      const double fmp = weight_at(spec, shifted(shifted(x, i, -h), j, h));
      const double fmm = weight_at(spec, shifted(shifted(x, i, -h), j, -h));
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4 * h * h);
    }
  }
}

}  // namespace

void WeightedSpec::validate() const {
  if (!riemannian.field) throw InvalidArgument("weighted spec: missing metric");
  if (!weight_f) throw InvalidArgument("weighted spec: missing weight");
  if (N_effective && !(*N_effective > riemannian.dimension))
    throw InvalidArgument("weighted spec: N_effective must exceed the dimension");
}

MeasureDensity weighted_measure(const WeightedSpec& spec) {
  spec.validate();
  MeasureDensity m;
  m.kind = MeasureKind::weighted_riemannian;
  m.id = "exp(-" + spec.weight_id + ")";
  const MetricSpec metric = spec.riemannian;
  const auto f = spec.weight_f;
  m.sigma = [metric, f](const Location& x) {
    const MinkowskiNorm norm = metric.at(x);
    if (!norm.quadratic()) throw InvalidArgument("weighted measure requires a Riemannian metric");
    return std::exp(-f(x)) * std::sqrt(norm.a().determinant());
  };
  return m;
}

SpectrumReport solve_bakry_emery(const Mesh& mesh, const WeightedSpec& spec, int k_max, double multiplicity_gap) {
  FemProblem problem(mesh, spec.riemannian, weighted_measure(spec));
  if (!problem.quadratic()) throw InvalidArgument("solve_bakry_emery requires a Riemannian metric");
  return solve_linear_spectrum(problem, k_max, multiplicity_gap);
}

CrossValidation cross_validate_weighted(const Mesh& mesh, const WeightedSpec& spec, int k_max,
                                        const SolverConfig& config, double tolerance) {
  FemProblem problem(mesh, spec.riemannian, weighted_measure(spec));
  if (!problem.quadratic()) throw InvalidArgument("cross validation requires a Riemannian metric");
  const SpectrumReport lin = solve_linear_spectrum(problem, k_max, config.multiplicity_gap);
  const SpectrumReport nl = solve_nonlinear_higher(problem, k_max, config);
  CrossValidation cv;
  cv.tolerance = tolerance;
  cv.agree = nl.entries.size() == lin.entries.size();
  const std::size_t count = std::min(lin.entries.size(), nl.entries.size());
  for (std::size_t i = 0; i < count; ++i) {
    const double a = lin.entries[i].lambda, b = nl.entries[i].lambda;
    const double rel = std::abs(a) > 1e-12 ? std::abs(b - a) / std::abs(a) : std::abs(b - a);
    cv.linear.push_back(a);
    cv.nonlinear.push_back(b);
    cv.relative_difference.push_back(rel);
    cv.nonlinear_residual.push_back(nl.entries[i].residual);
    cv.max_relative_difference = std::max(cv.max_relative_difference, rel);
  }
  cv.agree = cv.agree && cv.max_relative_difference <= tolerance;
  return cv;
}

void write_cross_validation_csv(std::ostream& out, const CrossValidation& cv) {
  out << "k,linear,nonlinear,relative_difference,residual,agree\n";
  char buf[200];
  for (std::size_t i = 0; i < cv.linear.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.15g,%.15g,%.6e,%.6e,%d\n", i + 1, cv.linear[i], cv.nonlinear[i],
                  cv.relative_difference[i], cv.nonlinear_residual[i],
                  cv.relative_difference[i] <= cv.tolerance ? 1 : 0);
    out << buf;
  }
}

double bakry_emery_ricci(const WeightedSpec& spec, BaseGeometry base, const Location& x, const Eigen::Vector3d& y) {
  if (!spec.weight_f) throw InvalidArgument("bakry_emery_ricci: missing weight");
  const int n = spec.riemannian.dimension;
  if (!spec.N_effective) throw InvalidArgument("bakry_emery_ricci: N_effective is required");
  const double N = *spec.N_effective;
  if (!(N > n)) throw InvalidArgument("bakry_emery_ricci: N_effective must exceed n");
  Eigen::Vector3d grad;
  Eigen::Matrix3d hess;
  if (base == BaseGeometry::flat) {
    const MinkowskiNorm norm = spec.riemannian.at(x);
    if (!norm.quadratic() || !norm.a().isIdentity(1e-12))
      throw InvalidArgument("bakry_emery_ricci: flat base requires the Euclidean chart metric");
    derivatives(spec, x, n, grad, hess);
    const double df = grad.dot(y);
    return y.dot(hess * y) - df * df / (N - n);
  }
  // Round unit sphere: intrinsic Hessian of the restriction of f to S^n.
  if (n != 2) throw InvalidArgument("bakry_emery_ricci: round sphere base requires n = 2");
  const Eigen::Vector3d p(x.x, x.y, x.z);
  if (std::abs(p.norm() - 1.0) > 1e-9) throw InvalidArgument("bakry_emery_ricci: point not on the unit sphere");
  if (std::abs(p.dot(y)) > 1e-9 * (1.0 + y.norm())) throw InvalidArgument("bakry_emery_ricci: y is not tangent");
  derivatives(spec, x, 3, grad, hess);
  const double ric = (n - 1) * y.squaredNorm();
  const double hess_s = y.dot(hess * y) - p.dot(grad) * y.squaredNorm();
  const double df = grad.dot(y);
  return ric + hess_s - df * df / (N - n);
}

}  // namespace finsler
