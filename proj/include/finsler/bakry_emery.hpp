// SPDX-License-Identifier: Apache-2.0
//
// Weighted Riemannian manifolds (M, g, e^{-f} dvol_g): the linear drift
// Laplacian spectrum and its comparison with the nonlinear pipeline.
#pragma once

#include "finsler/eigensolver.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace finsler {

struct WeightedSpec {
  MetricSpec riemannian;
  std::function<double(const Location&)> weight_f;
  std::optional<double> N_effective;
  std::string weight_id = "f";

  void validate() const;
};

/// sigma(x) = e^{-f(x)} sqrt(det a(x)), kind weighted_riemannian.
MeasureDensity weighted_measure(const WeightedSpec& spec);

/// Lowest k_max eigenvalues of the drift Laplacian through the weighted pencil.
SpectrumReport solve_bakry_emery(const Mesh& mesh, const WeightedSpec& spec, int k_max,
                                 double multiplicity_gap = 1e-6);

struct CrossValidation {
  std::vector<double> linear;
  std::vector<double> nonlinear;
  std::vector<double> relative_difference;
  std::vector<double> nonlinear_residual;
  double max_relative_difference = 0.0;
  double tolerance = 1e-4;
  bool agree = false;
};

/// Runs the generic nonlinear pipeline and the linear weighted pencil on the
/// same weighted manifold and compares them value by value up to k_max.
CrossValidation cross_validate_weighted(const Mesh& mesh, const WeightedSpec& spec, int k_max,
                                        const SolverConfig& config = {}, double tolerance = 1e-4);

/// CSV columns: k,linear,nonlinear,relative_difference,residual,agree
void write_cross_validation_csv(std::ostream& out, const CrossValidation& cv);

enum class BaseGeometry { flat, round_sphere };

/// Ric(y) + Hess f(y, y) - df(y)^2 / (N - n) on a flat chart (y in chart
/// coordinates) or on the unit round sphere (x the embedded point, y a
/// tangent vector in R^3, f read from the embedding coordinates).
double bakry_emery_ricci(const WeightedSpec& spec, BaseGeometry base, const Location& x,
                         const Eigen::Vector3d& y);

}  // namespace finsler
