// SPDX-License-Identifier: Apache-2.0
//
// Eigenvalues of -Delta u = lambda u as critical values of the Rayleigh
// quotient E(u) = int F*^2(du) dm / int u^2 dm on the L2(dm) unit sphere.
//
// Linear metrics go through the symmetric-definite pencil K u = lambda M u.
// General metrics go through preconditioned projected descent on the M-sphere
// with linear constraints (zero mean, deflation), followed by a bordered Newton
// polish to a stationary point. Higher nonlinear values are min-max upper-bound
// candidates with residual certificates.
#pragma once

#include "finsler/fem.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

namespace finsler {

struct SolverConfig {
  /// Stationarity threshold on the M^-1 dual norm of the projected residual,
  /// relative to (1 + lambda).
  double descent_tolerance = 1e-9;
  int max_iterations = 4000;
  int restarts = 3;
  int deflation_count = 5;
  /// Relative clustering gap: values within gap * (1 + lambda) share a cluster.
  double multiplicity_gap = 1e-6;
  /// Largest weak residual accepted for a reported nonlinear entry.
  double acceptance_residual = 1e-6;
  /// Rounds of the alternating sup-over-subspace refinement (non-quadratic metrics only).
  int minimax_rounds = 4;
  unsigned long long seed = 1;

  void validate() const;
};

enum class SpectrumMethod { linear, nonlinear_descent, zero_mean_min };
const char* to_string(SpectrumMethod m);

struct SpectrumEntry {
  int k = 0;
  double lambda = 0.0;
  ScalarField eigenfield;
  double residual = 0.0;
  SpectrumMethod method = SpectrumMethod::linear;
  /// 1-based index of the cluster of numerically equal values; rows sharing an
  /// index form one distinct eigenvalue whose multiplicity is the row count.
  int cluster = 0;
  /// Set for nonlinear entries on non-quadratic metrics.
  bool upper_bound_candidate = false;
  /// sup of E over span(eigenfields 1..k); an upper bound for the k-th
  /// min-max value. NaN when not computed.
  double minimax_upper = 0.0;
};

struct SpectrumReport {
  std::vector<SpectrumEntry> entries;
  std::string metric_id;
  std::string measure_kind;
  std::string mesh_id;

  std::vector<double> lambdas() const;
  int multiplicity(int cluster) const;
};

struct EigenResult {
  double lambda = 0.0;
  ScalarField eigenfield;
  double residual = 0.0;
  int iterations = 0;
};

double rayleigh(const FemProblem& problem, const Eigen::VectorXd& u);
double rayleigh(const Mesh& mesh, const MetricSpec& spec, const MeasureDensity& measure,
                const ScalarField& u);

/// ||energy_gradient(u)/2 - lambda M u||_{M^-1}.
double weak_residual(const FemProblem& problem, const Eigen::VectorXd& u, double lambda);

/// Lowest k eigenpairs of the symmetric-definite pencil (K, M), ascending,
/// with M-orthonormal vectors. Dense for small pencils, shift-invert block
/// subspace iteration otherwise.
struct PencilPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
PencilPairs lowest_generalized_eigenpairs(const SparseMatrix& K, const SparseMatrix& M, int k);

/// Lowest k_max eigenpairs of K u = lambda M u for a quadratic metric.
SpectrumReport solve_linear_spectrum(const FemProblem& problem, int k_max,
                                     double multiplicity_gap = 1e-6);

/// Closed meshes: (0, normalized constant, 0). Dirichlet meshes: best
/// stationary minimizer of E over `restarts` random starts.
EigenResult solve_ground(const FemProblem& problem, const SolverConfig& config = {});

/// Minimum of E over the zero-mean functions (closed meshes only).
EigenResult solve_first_positive(const FemProblem& problem, const SolverConfig& config = {});

/// Min-max candidates for the k_max lowest values by deflated descent plus polish.
SpectrumReport solve_nonlinear_higher(const FemProblem& problem, int k_max,
                                      const SolverConfig& config = {});

/// sup of E over the span of `basis` (columns), by multi-start ascent on the
/// coefficient sphere. Exact for quadratic metrics.
double subspace_sup(const FemProblem& problem, const Eigen::MatrixXd& basis);

/// Number of report entries with eigenvalue < lambda.
int counting_function(const SpectrumReport& report, double lambda);

/// Assigns 1-based cluster indices to a sorted report.
void assign_clusters(SpectrumReport& report, double multiplicity_gap);

/// CSV columns: k,lambda,residual,multiplicity_cluster,method
void write_spectrum_csv(std::ostream& out, const SpectrumReport& report);
/// Structured document; eigenfields embedded on request.
std::string spectrum_to_json(const SpectrumReport& report, bool include_eigenfields);

}  // namespace finsler
