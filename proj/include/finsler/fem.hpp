// SPDX-License-Identifier: Apache-2.0
//
// P1 finite elements for a Finsler metric measure manifold: the L2(dm) mass
// matrix, the linear (reference) stiffness and the nonlinear Dirichlet energy
// int F*^2(du) dm with its gradient and Hessian.
#pragma once

#include "finsler/metric.hpp"
#include "finsler/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace finsler {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Per-vertex values on the free degrees of freedom of a mesh. Identified
/// vertices share one value; boundary vertices are implicitly zero.
struct ScalarField {
  Eigen::VectorXd values;
  std::string mesh_id;
};

/// Geometry and pointwise metric data of one element, cached at construction.
struct ElementData {
  std::array<int, 3> dofs{-1, -1, -1};
  std::array<int, 3> nodes{-1, -1, -1};
  int count = 2;
  /// Chart gradients of the barycentric basis functions (dimension x count).
  Eigen::Matrix<double, 2, 3> grad = Eigen::Matrix<double, 2, 3>::Zero();
  double volume = 0.0;
  double sigma = 0.0;
  Location anchor;
  MinkowskiNorm norm = MinkowskiNorm::euclidean(1);
  /// Inverse of the quadratic reference metric (a for Riemannian norms, the
  /// average metric otherwise); it defines the linear stiffness.
  Mat reference_inverse;
};

/// A mesh bound to a metric and a measure, with element data precomputed.
/// Immutable after construction and safe to share between threads.
class FemProblem {
 public:
  FemProblem(std::shared_ptr<const Mesh> mesh, MetricSpec metric, MeasureDensity measure);
  FemProblem(const Mesh& mesh, MetricSpec metric, MeasureDensity measure);

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const MetricSpec& metric() const { return metric_; }
  const MeasureDensity& measure() const { return measure_; }
  const std::vector<ElementData>& elements() const { return elements_; }
  int num_dofs() const { return mesh_->num_dofs; }
  int dimension() const { return mesh_->dimension; }
  /// All element norms have quadratic F^2.
  bool quadratic() const { return quadratic_; }

  const SparseMatrix& mass() const { return mass_; }
  /// Linear stiffness of the reference metric; equals the energy Hessian / 2
  /// when the metric is Riemannian.
  const SparseMatrix& stiffness() const { return stiffness_; }
  /// Lumped measure of every node, boundary nodes included.
  const Eigen::VectorXd& node_mass() const { return node_mass_; }
  /// Column M * 1 (dm-mean functional on free dofs).
  const Eigen::VectorXd& mass_ones() const { return mass_ones_; }

  /// Chart differential of u on element e.
  Vec differential(int e, const Eigen::VectorXd& u) const;

 private:
  void build();

  std::shared_ptr<const Mesh> mesh_;
  MetricSpec metric_;
  MeasureDensity measure_;
  std::vector<ElementData> elements_;
  bool quadratic_ = true;
  SparseMatrix mass_;
  SparseMatrix stiffness_;
  Eigen::VectorXd node_mass_;
  Eigen::VectorXd mass_ones_;
};

struct AssembledForms {
  SparseMatrix mass;
  std::optional<SparseMatrix> stiffness_riemannian;
};

SparseMatrix assemble_mass(const Mesh& mesh, const MeasureDensity& measure);
AssembledForms assemble_forms(const FemProblem& problem);

/// int F*^2(du) dm with centroid quadrature.
double energy_numerator(const FemProblem& problem, const Eigen::VectorXd& u);
double energy_numerator(const Mesh& mesh, const MetricSpec& spec, const MeasureDensity& measure,
                        const ScalarField& u);

/// Gradient of energy_numerator with respect to the free dof values.
Eigen::VectorXd energy_gradient(const FemProblem& problem, const Eigen::VectorXd& u);
Eigen::VectorXd energy_gradient(const Mesh& mesh, const MetricSpec& spec,
                                const MeasureDensity& measure, const ScalarField& u);

/// Energy and gradient in one sweep.
double energy_and_gradient(const FemProblem& problem, const Eigen::VectorXd& u, Eigen::VectorXd& grad);

/// Hessian of energy_numerator / 2. Elements with du = 0 use the reference metric.
SparseMatrix energy_half_hessian(const FemProblem& problem, const Eigen::VectorXd& u);

/// Interpolates a function of the vertex coordinates onto the free dofs.
template <typename Fn>
Eigen::VectorXd interpolate(const Mesh& mesh, Fn&& fn) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(mesh.num_dofs);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const int dof = mesh.dof_of_node[mesh.node_of_vertex[v]];
    if (dof >= 0) u(dof) = fn(mesh.vertices[v]);
  }
  return u;
}

}  // namespace finsler
