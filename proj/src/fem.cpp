// SPDX-License-Identifier: Apache-2.0
#include "finsler/fem.hpp"

#include <Eigen/LU>

#include <cmath>

namespace finsler {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::Matrix<double, 2, 3> basis_gradients(const ElementChart& chart, int dim, double& volume) {
  Eigen::Matrix<double, 2, 3> g = Eigen::Matrix<double, 2, 3>::Zero();
  if (dim == 1) {
    const double h = chart.local[1].x() - chart.local[0].x();
    volume = std::abs(h);
    g(0, 0) = -1.0 / h;
    g(0, 1) = 1.0 / h;
    return g;
  }
  Eigen::Matrix2d J;
  J.col(0) = chart.local[1] - chart.local[0];
  J.col(1) = chart.local[2] - chart.local[0];
  volume = 0.5 * std::abs(J.determinant());
  const Eigen::Matrix2d JinvT = J.inverse().transpose();
  Eigen::Matrix<double, 2, 3> ref;
  ref << -1, 1, 0, -1, 0, 1;
  g = JinvT * ref;
  return g;
}

double element_mass_factor(int dim, int i, int j) {
  if (dim == 1) return i == j ? 1.0 / 3.0 : 1.0 / 6.0;
  return i == j ? 1.0 / 6.0 : 1.0 / 12.0;
}

SparseMatrix from_triplets(int n, const Triplets& t) {
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

// F*(eta) through the Legendre transform; smooth in eta, unlike a direct sup.
double dual_value(const MinkowskiNorm& norm, const Vec& eta) {
  if (norm.quadratic() || eta.isZero(0.0)) return norm.dual(eta);
  return norm(norm.legendre_inv(eta));
}

}  // namespace

FemProblem::FemProblem(std::shared_ptr<const Mesh> mesh, MetricSpec metric, MeasureDensity measure)
    : mesh_(std::move(mesh)), metric_(std::move(metric)), measure_(std::move(measure)) {
  if (!mesh_) throw InvalidArgument("FemProblem: null mesh");
  if (metric_.dimension != mesh_->dimension)
    throw InvalidArgument("FemProblem: metric dimension does not match mesh dimension");
  if (!measure_.sigma) throw InvalidArgument("FemProblem: measure has no density");
  build();
}

FemProblem::FemProblem(const Mesh& mesh, MetricSpec metric, MeasureDensity measure)
    : FemProblem(std::make_shared<const Mesh>(mesh), std::move(metric), std::move(measure)) {}

void FemProblem::build() {
  const Mesh& m = *mesh_;
  const int dim = m.dimension;
  const int per = m.vertices_per_element();
  elements_.resize(m.elements.size());
  std::optional<MinkowskiNorm> constant_norm;
  Mat constant_ref;
  if (metric_.spatially_constant) {
    constant_norm = metric_.at(Location{});
    constant_ref = average_metric(*constant_norm).inverse();
  }
  quadratic_ = true;
  node_mass_ = Eigen::VectorXd::Zero(m.num_nodes);
  for (std::size_t e = 0; e < m.elements.size(); ++e) {
    ElementData& el = elements_[e];
    el.count = per;
    el.anchor = m.charts[e].anchor;
    for (int k = 0; k < per; ++k) {
      el.nodes[k] = m.node_of_vertex[m.elements[e][k]];
      el.dofs[k] = m.dof_of_node[el.nodes[k]];
    }
    el.grad = basis_gradients(m.charts[e], dim, el.volume);
    el.sigma = measure_.sigma(el.anchor);
    if (!std::isfinite(el.sigma) || el.sigma <= 0.0)
      throw NumericFailure("measure density is not positive at element " + std::to_string(e), el.sigma);
    if (constant_norm) {
      el.norm = *constant_norm;
      el.reference_inverse = constant_ref;
    } else {
      el.norm = metric_.at(el.anchor);
      el.reference_inverse = average_metric(el.norm).inverse();
    }
    quadratic_ = quadratic_ && el.norm.quadratic();
    for (int k = 0; k < per; ++k) node_mass_(el.nodes[k]) += el.sigma * el.volume / per;
  }

  Triplets mt, kt;
  mt.reserve(elements_.size() * per * per);
  kt.reserve(elements_.size() * per * per);
  for (const ElementData& el : elements_) {
    const auto G = el.grad.topRows(dim).leftCols(per);
    const Eigen::MatrixXd local_k = el.sigma * el.volume * (G.transpose() * el.reference_inverse * G);
    for (int i = 0; i < per; ++i) {
      if (el.dofs[i] < 0) continue;
      for (int j = 0; j < per; ++j) {
        if (el.dofs[j] < 0) continue;
        mt.emplace_back(el.dofs[i], el.dofs[j], el.sigma * el.volume * element_mass_factor(dim, i, j));
        kt.emplace_back(el.dofs[i], el.dofs[j], local_k(i, j));
      }
    }
  }
  mass_ = from_triplets(m.num_dofs, mt);
  stiffness_ = from_triplets(m.num_dofs, kt);
  mass_ones_ = mass_ * Eigen::VectorXd::Ones(m.num_dofs);
}

Vec FemProblem::differential(int e, const Eigen::VectorXd& u) const {
  const ElementData& el = elements_[e];
  const int dim = mesh_->dimension;
  Vec eta = Vec::Zero(dim);
  for (int k = 0; k < el.count; ++k)
    if (el.dofs[k] >= 0) eta += u(el.dofs[k]) * el.grad.col(k).head(dim);
  return eta;
}

SparseMatrix assemble_mass(const Mesh& mesh, const MeasureDensity& measure) {
  const int dim = mesh.dimension;
  const int per = mesh.vertices_per_element();
  Triplets t;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const double sigma = measure.sigma(mesh.charts[e].anchor);
    if (!std::isfinite(sigma) || sigma <= 0.0)
      throw NumericFailure("measure density is not positive", sigma);
    const double vol = mesh.element_volume(static_cast<int>(e));
    for (int i = 0; i < per; ++i) {
      const int di = mesh.dof_of_node[mesh.node_of_vertex[mesh.elements[e][i]]];
      if (di < 0) continue;
      for (int j = 0; j < per; ++j) {
        const int dj = mesh.dof_of_node[mesh.node_of_vertex[mesh.elements[e][j]]];
        if (dj >= 0) t.emplace_back(di, dj, sigma * vol * element_mass_factor(dim, i, j));
      }
    }
  }
  return from_triplets(mesh.num_dofs, t);
}

AssembledForms assemble_forms(const FemProblem& problem) {
  AssembledForms forms;
  forms.mass = problem.mass();
  if (problem.quadratic()) forms.stiffness_riemannian = problem.stiffness();
  return forms;
}

double energy_numerator(const FemProblem& problem, const Eigen::VectorXd& u) {
  if (u.size() != problem.num_dofs()) throw InvalidArgument("energy: field size mismatch");
  double total = 0.0;
  const auto& els = problem.elements();
  for (std::size_t e = 0; e < els.size(); ++e) {
    const Vec eta = problem.differential(static_cast<int>(e), u);
    const double fs = dual_value(els[e].norm, eta);
    total += els[e].sigma * els[e].volume * fs * fs;
  }
  return total;
}

double energy_and_gradient(const FemProblem& problem, const Eigen::VectorXd& u, Eigen::VectorXd& grad) {
  if (u.size() != problem.num_dofs()) throw InvalidArgument("energy: field size mismatch");
  const int dim = problem.dimension();
  grad = Eigen::VectorXd::Zero(u.size());
  double total = 0.0;
  const auto& els = problem.elements();
  for (std::size_t e = 0; e < els.size(); ++e) {
    const ElementData& el = els[e];
    const Vec eta = problem.differential(static_cast<int>(e), u);
    if (eta.isZero(0.0)) continue;
    const double w = el.sigma * el.volume;
    // d/d eta (F*^2) = 2 L^{-1}(eta), and F*(eta) = F(L^{-1}(eta)).
    const Vec v = el.norm.legendre_inv(eta);
    const double fs = el.norm.quadratic() ? el.norm.dual(eta) : el.norm(v);
    total += w * fs * fs;
    for (int k = 0; k < el.count; ++k)
      if (el.dofs[k] >= 0) grad(el.dofs[k]) += 2.0 * w * el.grad.col(k).head(dim).dot(v);
  }
  return total;
}

Eigen::VectorXd energy_gradient(const FemProblem& problem, const Eigen::VectorXd& u) {
  Eigen::VectorXd g;
  energy_and_gradient(problem, u, g);
  return g;
}

double energy_numerator(const Mesh& mesh, const MetricSpec& spec, const MeasureDensity& measure,
                        const ScalarField& u) {
  return energy_numerator(FemProblem(mesh, spec, measure), u.values);
}

Eigen::VectorXd energy_gradient(const Mesh& mesh, const MetricSpec& spec,
                                const MeasureDensity& measure, const ScalarField& u) {
  return energy_gradient(FemProblem(mesh, spec, measure), u.values);
}

SparseMatrix energy_half_hessian(const FemProblem& problem, const Eigen::VectorXd& u) {
  const int dim = problem.dimension();
  Triplets t;
  const auto& els = problem.elements();
  for (std::size_t e = 0; e < els.size(); ++e) {
    const ElementData& el = els[e];
    Mat hinv;
    const Vec eta = problem.differential(static_cast<int>(e), u);
    if (el.norm.quadratic() || eta.isZero(0.0)) {
      hinv = el.reference_inverse;
    } else {
      // Hessian of F*^2/2 at eta is the inverse fundamental tensor at L^{-1}(eta).
      hinv = el.norm.fundamental_tensor(el.norm.legendre_inv(eta)).inverse();
    }
    const auto G = el.grad.topRows(dim).leftCols(el.count);
    const Eigen::MatrixXd local = el.sigma * el.volume * (G.transpose() * hinv * G);
    for (int i = 0; i < el.count; ++i) {
      if (el.dofs[i] < 0) continue;
      for (int j = 0; j < el.count; ++j)
        if (el.dofs[j] >= 0) t.emplace_back(el.dofs[i], el.dofs[j], local(i, j));
    }
  }
  return from_triplets(problem.num_dofs(), t);
}

}  // namespace finsler
