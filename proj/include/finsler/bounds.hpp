// SPDX-License-Identifier: Apache-2.0
//
// Space-form reference functions, first Dirichlet eigenvalues of geodesic
// balls in model spaces, and the comparison checks built on them.
#pragma once

#include "finsler/eigensolver.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace finsler {

/// Solution of f'' + K f = 0, f(0) = 0, f'(0) = 1.
double s_K(double K, double r);
/// vol of the unit (n-1)-sphere, 2 pi^{n/2} / Gamma(n/2).
double unit_sphere_volume(int n);
/// Area of the geodesic sphere of radius r in the n-dimensional space form.
double A_nK(int n, double K, double r);
/// Volume of the geodesic ball of radius r in the n-dimensional space form.
double V_nK(int n, double K, double r);

/// First Dirichlet eigenvalue of the radial problem
///   phi'' + (N-1) (s_K'/s_K) phi' + lambda phi = 0,  phi'(0) = 0, phi(r) = 0
/// by shooting and bisection. Requires r < pi / sqrt(K) when K > 0.
double spaceform_ball_eigen(double N, double K, double r);

struct CurvatureAssumption {
  double N = 2.0;      ///< effective dimension
  double K = 0.0;      ///< curvature lower bound parameter
  double d = 1.0;      ///< diameter
  double Theta = 1.0;  ///< distortion bound, |tau| <= log Theta
  double Lambda = 1.0; ///< uniformity constant
  int n = 2;           ///< manifold dimension
  std::optional<double> injectivity;

  void validate() const;
};

/// spaceform_ball_eigen(N, K, d / 2k).
double cheng_bound(const CurvatureAssumption& assumption, int k);

/// h^2 / (4 Lambda^{1+n} Theta^2).
double cheeger_lower_expression(double h, double Lambda, double Theta, int n);

struct BoundRecord {
  int k = 0;
  double computed_lambda = 0.0;
  double upper_bound = 0.0;
  /// Informational lower value (NaN when absent).
  double lower_bound_expression = 0.0;
  bool upper_ok = true;
  bool lower_ok = true;
  bool satisfied = true;
};

struct BoundReport {
  std::vector<BoundRecord> records;
  double slack = 0.02;
  double continuum_factor = 4.0;
  std::string provenance;

  bool all_satisfied() const;
};

/// Optional lower-side input, e.g. from the Dirichlet region pipeline: a
/// value claimed to bound the `index`-th positive eigenvalue from below up to
/// `continuum_factor`.
struct LowerIndication {
  int index = 1;
  double value = 0.0;
  double continuum_factor = 4.0;
};

/// Compares the positive part of a closed-manifold spectrum against the ball
/// bound: record k holds the k-th positive eigenvalue (counted with
/// multiplicity) and checks lambda <= (1 + slack) * cheng_bound(k).
BoundReport check_bounds(const SpectrumReport& report, const CurvatureAssumption& assumption,
                         int k_max, double slack = 0.02,
                         const std::optional<LowerIndication>& lower = std::nullopt);

/// Same check on a bare list of positive eigenvalues (ascending).
BoundReport check_bounds(const std::vector<double>& positive_lambdas,
                         const CurvatureAssumption& assumption, int k_max, double slack = 0.02,
                         const std::optional<LowerIndication>& lower = std::nullopt);

/// CSV columns: k,computed_lambda,upper_bound,lower_bound_expression,satisfied
void write_bound_csv(std::ostream& out, const BoundReport& report);

}  // namespace finsler
