// SPDX-License-Identifier: Apache-2.0
#include "finsler/eigensolver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

namespace finsler {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Linear pencil

using PencilResult = PencilPairs;

PencilResult dense_pencil(const SparseMatrix& K, const SparseMatrix& M, int k) {
  const MatrixXd Kd(K), Md(M);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(Kd, Md);
  if (ges.info() != Eigen::Success) throw NumericFailure("dense generalized eigensolver failed");
  return {ges.eigenvalues().head(k), ges.eigenvectors().leftCols(k)};
}

double pencil_residual(const SparseMatrix& K, const SparseMatrix& M, const VectorXd& u, double lambda) {
  const VectorXd Mu = M * u;
  return (K * u - lambda * Mu).norm() / Mu.norm();
}

// Shift-invert block subspace iteration with Rayleigh-Ritz.
PencilResult sparse_pencil(const SparseMatrix& K, const SparseMatrix& M, int k) {
  const int n = static_cast<int>(K.rows());
  const int p = std::min(n, std::max(2 * k, k + 10));
  const double shift = 1e-3 * K.diagonal().sum() / M.diagonal().sum();
  const SparseMatrix A = K + shift * M;
  Eigen::SimplicialLDLT<SparseMatrix> solver(A);
  if (solver.info() != Eigen::Success) throw NumericFailure("pencil factorization breakdown");

  std::mt19937_64 rng(0x5eed1234ULL);
  std::normal_distribution<double> normal;
  MatrixXd X(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = normal(rng);

  PencilResult out;
  for (int it = 0; it < 2000; ++it) {
    MatrixXd Y = solver.solve(M * X);
    if (solver.info() != Eigen::Success) throw NumericFailure("pencil solve breakdown");
    Eigen::HouseholderQR<MatrixXd> qr(Y);
    const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, p);
    const MatrixXd Kr = Q.transpose() * (K * Q);
    const MatrixXd Mr = Q.transpose() * (M * Q);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(0.5 * (Kr + Kr.transpose()),
                                                          0.5 * (Mr + Mr.transpose()));
    if (ges.info() != Eigen::Success) throw NumericFailure("Rayleigh-Ritz step failed");
    X = Q * ges.eigenvectors();
    double worst = 0.0;
    for (int j = 0; j < k; ++j)
      worst = std::max(worst, pencil_residual(K, M, X.col(j), ges.eigenvalues()(j)));
    out.values = ges.eigenvalues().head(k);
    out.vectors = X.leftCols(k);
    if (worst < 1e-11) break;
  }
  return out;
}

PencilResult lowest_pencil(const SparseMatrix& K, const SparseMatrix& M, int k) {
  if (k < 1) throw InvalidArgument("k_max must be >= 1");
  if (k > K.rows()) throw InvalidArgument("k_max exceeds the number of degrees of freedom");
  if (K.rows() <= 400) return dense_pencil(K, M, k);
  return sparse_pencil(K, M, k);
}

// ---------------------------------------------------------------------------
// Constrained descent on the M-sphere

class SphereDescent {
 public:
  explicit SphereDescent(const FemProblem& problem) : problem_(problem), M_(problem.mass()) {
    mass_solver_.compute(M_);
    if (mass_solver_.info() != Eigen::Success) throw NumericFailure("mass matrix factorization failed");
    const SparseMatrix& K = problem.stiffness();
    const double shift = 1e-3 * K.diagonal().sum() / M_.diagonal().sum();
    precond_.compute(K + shift * M_);
    if (precond_.info() != Eigen::Success) throw NumericFailure("preconditioner factorization failed");
  }

  const FemProblem& problem() const { return problem_; }
  const SparseMatrix& mass() const { return M_; }

  /// Columns c_j; iterates stay M-orthogonal to them.
  void set_constraints(const MatrixXd& C) {
    C_ = C;
    W_ = M_ * C_;
    gram_ = (C_.transpose() * W_).ldlt();
    PinvW_ = C_.cols() ? MatrixXd(precond_.solve(W_)) : MatrixXd(M_.rows(), 0);
  }

  VectorXd project(const VectorXd& u) const {
    if (C_.cols() == 0) return u;
    return u - C_ * gram_.solve(W_.transpose() * u);
  }

  VectorXd normalize(const VectorXd& u) const { return u / std::sqrt(u.dot(M_ * u)); }

  VectorXd random_start(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal;
    VectorXd u(M_.rows());
    for (int i = 0; i < u.size(); ++i) u(i) = normal(rng);
    for (int s = 0; s < 2; ++s) u = precond_.solve(M_ * u);
    return normalize(project(u));
  }

  struct State {
    VectorXd u;
    double lambda = 0.0;
    double stationarity = 0.0;
    int iterations = 0;
  };

  /// Stationarity of u on the constrained sphere, M^-1 dual norm.
  double stationarity(const VectorXd& r) const {
    VectorXd rc = r;
    if (C_.cols()) rc -= W_ * gram_.solve(C_.transpose() * r);
    return std::sqrt(std::max(0.0, rc.dot(mass_solver_.solve(rc))));
  }

  State descend(VectorXd u, double tol, int max_iterations) const {
    u = normalize(project(u));
    VectorXd g;
    double energy = energy_and_gradient(problem_, u, g);
    State st;
    VectorXd u_prev, r_prev;
    double alpha = 1.0;
    double best_stationarity = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int it = 0; it <= max_iterations; ++it) {
      const VectorXd Mu = M_ * u;
      const double lambda = energy;
      const VectorXd r = 0.5 * g - lambda * Mu;
      st.u = u;
      st.lambda = lambda;
      st.stationarity = stationarity(r);
      st.iterations = it;
      if (st.stationarity <= tol * (1.0 + lambda) || it == max_iterations) break;
      // Rounding floor of E reached: leave the rest to the Newton polish.
      if (st.stationarity < 0.999 * best_stationarity) {
        best_stationarity = st.stationarity;
        stalled = 0;
      } else if (++stalled > 8) {
        break;
      }

      // Preconditioned direction, P-orthogonally projected onto the tangent
      // space of the constrained sphere.
      const VectorXd z = precond_.solve(r);
      const VectorXd PinvMu = precond_.solve(Mu);
      MatrixXd What(M_.rows(), W_.cols() + 1), Z(M_.rows(), W_.cols() + 1);
      What << W_, Mu;
      Z << PinvW_, PinvMu;
      VectorXd d = -(z - Z * (What.transpose() * Z).ldlt().solve(What.transpose() * z));
      const double slope = 2.0 * r.dot(d);
      if (!(slope < 0.0)) break;

      if (it > 0) {
        const VectorXd s = u - u_prev, y = r - r_prev;
        const double sy = s.dot(y);
        const SparseMatrix& K = problem_.stiffness();
        const double sPs = s.dot(K * s) + 1e-3 * s.dot(M_ * s);
        alpha = sy > 0.0 ? std::clamp(sPs / sy, 1e-6, 1e6) : std::min(2.0 * alpha, 1e6);
      }
      // Keep the step a modest rotation of the sphere.
      const double dnorm = std::sqrt(d.dot(M_ * d));
      double t = std::min(alpha, 0.8 / dnorm);
      bool accepted = false;
      VectorXd trial, g_trial;
      double e_trial = 0.0;
      for (int bt = 0; bt < 40; ++bt) {
        trial = normalize(project(u + t * d));
        e_trial = energy_and_gradient(problem_, trial, g_trial);
        if (e_trial <= energy + 1e-4 * t * slope) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;  // rounding floor: no measurable decrease left
      u_prev = u;
      r_prev = r;
      u = trial;
      g = g_trial;
      energy = e_trial;
      alpha = t;
    }
    return st;
  }

  /// Bordered Newton iteration on G(u) - lambda M u - W mu = 0, u'Mu = 1,
  /// W'u = 0. Returns the polished point (with constraints kept).
  State polish(State st, bool constrained, int max_steps = 25) const {
    const int n = static_cast<int>(M_.rows());
    const int m = constrained ? static_cast<int>(W_.cols()) : 0;
    VectorXd u = st.u;
    double lambda = st.lambda;
    VectorXd mu = VectorXd::Zero(m);
    auto full_residual = [&](const VectorXd& v, double lam, const VectorXd& mult, VectorXd& r1) {
      VectorXd g;
      energy_and_gradient(problem_, v, g);
      r1 = 0.5 * g - lam * (M_ * v);
      if (m) r1 -= W_ * mult;
      const double r2 = 0.5 * (1.0 - v.dot(M_ * v));
      return std::sqrt(std::max(0.0, r1.dot(mass_solver_.solve(r1))) + r2 * r2);
    };
    if (m) {
      // Least-squares multipliers for the starting point.
      VectorXd g;
      energy_and_gradient(problem_, u, g);
      const VectorXd r = 0.5 * g - lambda * (M_ * u);
      mu = gram_.solve(C_.transpose() * r);
    }
    VectorXd r1;
    double res = full_residual(u, lambda, mu, r1);
    for (int step = 0; step < max_steps; ++step) {
      if (res <= 1e-13 * (1.0 + std::abs(lambda))) break;
      const SparseMatrix H = energy_half_hessian(problem_, u);
      const VectorXd Mu = M_ * u;
      std::vector<Eigen::Triplet<double>> t;
      t.reserve(H.nonZeros() + M_.nonZeros() + 2 * n * (m + 1));
      const SparseMatrix A = H - lambda * M_;
      for (int c = 0; c < A.outerSize(); ++c)
        for (SparseMatrix::InnerIterator itr(A, c); itr; ++itr)
          t.emplace_back(itr.row(), itr.col(), itr.value());
      for (int i = 0; i < n; ++i) {
        if (Mu(i) != 0.0) {
          t.emplace_back(i, n, -Mu(i));
          t.emplace_back(n, i, -Mu(i));
        }
        for (int j = 0; j < m; ++j)
          if (W_(i, j) != 0.0) {
            t.emplace_back(i, n + 1 + j, -W_(i, j));
            t.emplace_back(n + 1 + j, i, -W_(i, j));
          }
      }
      SparseMatrix J(n + 1 + m, n + 1 + m);
      J.setFromTriplets(t.begin(), t.end());
      J.makeCompressed();
      Eigen::SparseLU<SparseMatrix> lu;
      lu.compute(J);
      if (lu.info() != Eigen::Success) break;
      VectorXd rhs(n + 1 + m);
      rhs.head(n) = -r1;
      rhs(n) = -0.5 * (1.0 - u.dot(Mu));
      if (m) rhs.tail(m) = W_.transpose() * u;
      const VectorXd delta = lu.solve(rhs);
      if (lu.info() != Eigen::Success || !delta.allFinite()) break;
      double s = 1.0;
      bool improved = false;
      for (int bt = 0; bt < 12; ++bt) {
        const VectorXd u_new = u + s * delta.head(n);
        const double lam_new = lambda + s * delta(n);
        const VectorXd mu_new = m ? VectorXd(mu + s * delta.tail(m)) : mu;
        VectorXd r1_new;
        const double res_new = full_residual(u_new, lam_new, mu_new, r1_new);
        if (res_new < res) {
          u = u_new;
          lambda = lam_new;
          mu = mu_new;
          r1 = r1_new;
          res = res_new;
          improved = true;
          break;
        }
        s *= 0.5;
      }
      if (!improved) break;
    }
    st.u = normalize(m ? project(u) : u);
    st.lambda = rayleigh(problem_, st.u);
    return st;
  }

 private:
  const FemProblem& problem_;
  const SparseMatrix& M_;
  Eigen::SimplicialLDLT<SparseMatrix> mass_solver_;
  Eigen::SimplicialLDLT<SparseMatrix> precond_;
  MatrixXd C_ = MatrixXd(0, 0);
  MatrixXd W_ = MatrixXd(0, 0);
  MatrixXd PinvW_ = MatrixXd(0, 0);
  Eigen::LDLT<MatrixXd> gram_;
};

std::mt19937_64 level_rng(unsigned long long seed, int level, int restart) {
  std::seed_seq seq{static_cast<unsigned>(seed & 0xffffffffULL), static_cast<unsigned>(seed >> 32),
                    static_cast<unsigned>(level), static_cast<unsigned>(restart)};
  return std::mt19937_64(seq);
}

// Best descent result over restarts: lowest E, then smallest residual, then
// earliest restart.
SphereDescent::State best_of_restarts(const SphereDescent& sd, const SolverConfig& cfg, int level) {
  SphereDescent::State best;
  bool have = false;
  for (int r = 0; r < cfg.restarts; ++r) {
    auto rng = level_rng(cfg.seed, level, r);
    auto st = sd.descend(sd.random_start(rng), cfg.descent_tolerance, cfg.max_iterations);
    const double tie = cfg.multiplicity_gap * (1.0 + std::abs(st.lambda));
    if (!have || st.lambda < best.lambda - tie ||
        (std::abs(st.lambda - best.lambda) <= tie && st.stationarity < best.stationarity)) {
      best = st;
      have = true;
    }
  }
  return best;
}

MatrixXd columns(const std::vector<VectorXd>& vs, int n) {
  MatrixXd C(n, static_cast<int>(vs.size()));
  for (std::size_t j = 0; j < vs.size(); ++j) C.col(static_cast<int>(j)) = vs[j];
  return C;
}

// Finds the stationary point for one level: descent under the constraints,
// constrained polish, and an unconstrained polish if multipliers remain.
SphereDescent::State solve_level(SphereDescent& sd, const SolverConfig& cfg, int level,
                                 const std::vector<VectorXd>& deflate) {
  const FemProblem& P = sd.problem();
  sd.set_constraints(columns(deflate, P.num_dofs()));
  auto st = best_of_restarts(sd, cfg, level);
  st = sd.polish(st, true);
  double res = weak_residual(P, st.u, st.lambda);
  if (res > cfg.acceptance_residual * (1.0 + st.lambda) && !deflate.empty()) {
    auto free_st = sd.polish(st, false);
    const double free_res = weak_residual(P, free_st.u, free_st.lambda);
    if (free_res < res) {
      st = free_st;
      res = free_res;
    }
  }
  st.stationarity = res;
  return st;
}

VectorXd normalized_constant(const FemProblem& P) {
  VectorXd one = VectorXd::Ones(P.num_dofs());
  return one / std::sqrt(one.dot(P.mass() * one));
}

// M-orthonormal basis of the span of the columns.
MatrixXd m_orthonormal(const SparseMatrix& M, const MatrixXd& V) {
  const MatrixXd G = V.transpose() * (M * V);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (G + G.transpose()));
  const VectorXd d = eig.eigenvalues();
  const double cut = 1e-12 * d.maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < d.size(); ++i)
    if (d(i) > cut) keep.push_back(i);
  MatrixXd B(V.rows(), static_cast<int>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    B.col(static_cast<int>(j)) = V * eig.eigenvectors().col(keep[j]) / std::sqrt(d(keep[j]));
  return B;
}

// sup of N(Bc) over |c| = 1 for an M-orthonormal basis B; returns the maximizer.
double orthonormal_sup(const FemProblem& P, const MatrixXd& B, VectorXd* argmax) {
  const int k = static_cast<int>(B.cols());
  if (k == 0) return 0.0;
  if (P.quadratic()) {
    const MatrixXd A = B.transpose() * (P.stiffness() * B);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (A + A.transpose()));
    if (argmax) *argmax = eig.eigenvectors().col(k - 1);
    return eig.eigenvalues()(k - 1);
  }
  // Nonlinear power iteration c <- grad f(c) / |grad f(c)|; monotone for the
  // convex 2-homogeneous energy.
  std::vector<VectorXd> starts;
  {
    const MatrixXd A = B.transpose() * (P.stiffness() * B);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (A + A.transpose()));
    starts.push_back(eig.eigenvectors().col(k - 1));
  }
  for (int j = 0; j < k; ++j) starts.push_back(VectorXd::Unit(k, j));
  std::mt19937_64 rng(0xc0ffeeULL + static_cast<unsigned long long>(k));
  std::normal_distribution<double> normal;
  for (int s = 0; s < 2; ++s) {
    VectorXd c(k);
    for (int i = 0; i < k; ++i) c(i) = normal(rng);
    starts.push_back(c.normalized());
  }
  double best = -1.0;
  for (VectorXd c : starts) {
    double f = energy_numerator(P, B * c);
    for (int it = 0; it < 400; ++it) {
      VectorXd g;
      energy_and_gradient(P, B * c, g);
      const VectorXd gc = B.transpose() * g;
      if (gc.norm() == 0.0) break;
      const VectorXd next = gc.normalized();
      const double fn = energy_numerator(P, B * next);
      if (fn <= f * (1.0 + 1e-13)) break;
      c = next;
      f = fn;
    }
    if (f > best) {
      best = f;
      if (argmax) *argmax = c;
    }
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------

PencilPairs lowest_generalized_eigenpairs(const SparseMatrix& K, const SparseMatrix& M, int k) {
  return lowest_pencil(K, M, k);
}

void SolverConfig::validate() const {
  if (!(descent_tolerance > 0) || !(multiplicity_gap > 0) || !(acceptance_residual > 0))
    throw InvalidArgument("solver config: tolerances must be positive");
  if (restarts < 1) throw InvalidArgument("solver config: restarts must be >= 1");
  if (max_iterations < 1) throw InvalidArgument("solver config: max_iterations must be >= 1");
}

const char* to_string(SpectrumMethod m) {
  switch (m) {
    case SpectrumMethod::linear: return "linear";
    case SpectrumMethod::nonlinear_descent: return "nonlinear_descent";
    case SpectrumMethod::zero_mean_min: return "zero_mean_min";
  }
  return "unknown";
}

std::vector<double> SpectrumReport::lambdas() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.lambda);
  return out;
}

int SpectrumReport::multiplicity(int cluster) const {
  return static_cast<int>(std::count_if(entries.begin(), entries.end(),
                                        [&](const SpectrumEntry& e) { return e.cluster == cluster; }));
}

double rayleigh(const FemProblem& problem, const VectorXd& u) {
  const double denom = u.dot(problem.mass() * u);
  if (!(denom > 0.0)) throw InvalidArgument("rayleigh: zero field");
  return energy_numerator(problem, u) / denom;
}

double rayleigh(const Mesh& mesh, const MetricSpec& spec, const MeasureDensity& measure,
                const ScalarField& u) {
  return rayleigh(FemProblem(mesh, spec, measure), u.values);
}

double weak_residual(const FemProblem& problem, const VectorXd& u, double lambda) {
  const VectorXd r = 0.5 * energy_gradient(problem, u) - lambda * (problem.mass() * u);
  Eigen::SimplicialLDLT<SparseMatrix> solver(problem.mass());
  return std::sqrt(std::max(0.0, r.dot(solver.solve(r))));
}

void assign_clusters(SpectrumReport& report, double gap) {
  int cluster = 0;
  double anchor = 0.0;
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    auto& e = report.entries[i];
    if (i == 0 || std::abs(e.lambda - anchor) > gap * (1.0 + std::abs(anchor))) {
      ++cluster;
      anchor = e.lambda;
    }
    e.cluster = cluster;
  }
}

SpectrumReport solve_linear_spectrum(const FemProblem& problem, int k_max, double gap) {
  if (!problem.quadratic())
    throw InvalidArgument("solve_linear_spectrum requires a Riemannian (quadratic) metric");
  const auto res = lowest_pencil(problem.stiffness(), problem.mass(), k_max);
  SpectrumReport report;
  report.metric_id = problem.metric().id;
  report.measure_kind = to_string(problem.measure().kind);
  report.mesh_id = problem.mesh().id;
  for (int j = 0; j < k_max; ++j) {
    SpectrumEntry e;
    e.k = j + 1;
    e.lambda = std::max(0.0, res.values(j));
    VectorXd u = res.vectors.col(j);
    if (j == 0 && problem.mesh().closed()) {
      // Constants span the exact kernel on closed meshes.
      e.lambda = 0.0;
      u = normalized_constant(problem);
    }
    u /= std::sqrt(u.dot(problem.mass() * u));
    // Deterministic sign: largest-magnitude component positive.
    Eigen::Index imax = 0;
    u.cwiseAbs().maxCoeff(&imax);
    if (u(imax) < 0) u = -u;
    e.eigenfield = ScalarField{u, problem.mesh().id};
    e.residual = pencil_residual(problem.stiffness(), problem.mass(), u, e.lambda);
    e.method = SpectrumMethod::linear;
    e.minimax_upper = kNaN;
    report.entries.push_back(std::move(e));
  }
  assign_clusters(report, gap);
  return report;
}

EigenResult solve_ground(const FemProblem& problem, const SolverConfig& config) {
  config.validate();
  if (problem.mesh().closed()) {
    return EigenResult{0.0, ScalarField{normalized_constant(problem), problem.mesh().id}, 0.0, 0};
  }
  SphereDescent sd(problem);
  auto st = solve_level(sd, config, 1, {});
  if (!(st.stationarity <= config.acceptance_residual * (1.0 + st.lambda)))
    throw ConvergenceFailure("solve_ground: no start reached stationarity", st.u, st.lambda,
                             st.stationarity);
  return EigenResult{st.lambda, ScalarField{st.u, problem.mesh().id}, st.stationarity, st.iterations};
}

EigenResult solve_first_positive(const FemProblem& problem, const SolverConfig& config) {
  config.validate();
  if (!problem.mesh().closed())
    throw InvalidArgument("solve_first_positive requires a closed mesh");
  SphereDescent sd(problem);
  auto st = solve_level(sd, config, 2, {normalized_constant(problem)});
  if (!(st.stationarity <= config.acceptance_residual * (1.0 + st.lambda)))
    throw ConvergenceFailure("solve_first_positive: no start reached stationarity", st.u, st.lambda,
                             st.stationarity);
  return EigenResult{st.lambda, ScalarField{st.u, problem.mesh().id}, st.stationarity, st.iterations};
}

double subspace_sup(const FemProblem& problem, const MatrixXd& basis) {
  return orthonormal_sup(problem, m_orthonormal(problem.mass(), basis), nullptr);
}

SpectrumReport solve_nonlinear_higher(const FemProblem& problem, int k_max, const SolverConfig& config) {
  config.validate();
  if (k_max < 1) throw InvalidArgument("k_max must be >= 1");
  if (k_max > problem.num_dofs()) throw InvalidArgument("k_max exceeds the number of degrees of freedom");
  SpectrumReport report;
  report.metric_id = problem.metric().id;
  report.measure_kind = to_string(problem.measure().kind);
  report.mesh_id = problem.mesh().id;
  const bool closed = problem.mesh().closed();
  const bool candidate = !problem.quadratic();

  SphereDescent sd(problem);
  std::vector<VectorXd> found;
  for (int k = 1; k <= k_max; ++k) {
    SpectrumEntry e;
    e.k = k;
    e.upper_bound_candidate = candidate;
    if (k == 1 && closed) {
      const VectorXd c = normalized_constant(problem);
      e.lambda = 0.0;
      e.eigenfield = ScalarField{c, problem.mesh().id};
      e.residual = weak_residual(problem, c, 0.0);
      e.method = SpectrumMethod::nonlinear_descent;
    } else {
      auto st = solve_level(sd, config, k, found);
      e.lambda = st.lambda;
      e.eigenfield = ScalarField{st.u, problem.mesh().id};
      e.residual = st.stationarity;
      e.method = (closed && k == 2) ? SpectrumMethod::zero_mean_min : SpectrumMethod::nonlinear_descent;
      if (!(e.residual <= config.acceptance_residual * (1.0 + e.lambda))) break;  // partial report
    }
    found.push_back(e.eigenfield.values);
    report.entries.push_back(std::move(e));
  }

  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const SpectrumEntry& a, const SpectrumEntry& b) { return a.lambda < b.lambda; });
  for (std::size_t i = 0; i < report.entries.size(); ++i) report.entries[i].k = static_cast<int>(i) + 1;

  // Min-max certificates: sup of E over span of the first k eigenfields,
  // optionally lowered by alternating descent on the maximizing direction.
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    std::vector<VectorXd> span;
    for (std::size_t j = 0; j <= i; ++j) span.push_back(report.entries[j].eigenfield.values);
    MatrixXd B = m_orthonormal(problem.mass(), columns(span, problem.num_dofs()));
    VectorXd cstar;
    double sup = orthonormal_sup(problem, B, &cstar);
    // The sup is at least the largest value in the span; nothing to refine at equality.
    const double floor_value = report.entries[i].lambda;
    for (int round = 0; sup > floor_value * (1.0 + 1e-10) && candidate && round < config.minimax_rounds && B.cols() > 1; ++round) {
      const VectorXd w = B * cstar;
      // Orthogonal complement of w inside span(B).
      MatrixXd rest(B.rows(), B.cols());
      for (int j = 0; j < B.cols(); ++j) rest.col(j) = B.col(j) - w * w.dot(problem.mass() * B.col(j));
      rest = m_orthonormal(problem.mass(), rest);
      std::vector<VectorXd> cons;
      for (int j = 0; j < rest.cols(); ++j) cons.push_back(rest.col(j));
      sd.set_constraints(columns(cons, problem.num_dofs()));
      auto st = sd.descend(w, config.descent_tolerance, 25);
      MatrixXd trial(B.rows(), rest.cols() + 1);
      trial << rest, st.u;
      trial = m_orthonormal(problem.mass(), trial);
      VectorXd c2;
      const double sup2 = orthonormal_sup(problem, trial, &c2);
      if (!(sup2 < sup * (1.0 - 1e-12))) break;
      B = trial;
      cstar = c2;
      sup = sup2;
    }
    report.entries[i].minimax_upper = sup;
  }
  assign_clusters(report, config.multiplicity_gap);
  return report;
}

int counting_function(const SpectrumReport& report, double lambda) {
  int count = 0;
  for (const auto& e : report.entries)
    if (e.lambda < lambda) ++count;
  return count;
}

void write_spectrum_csv(std::ostream& out, const SpectrumReport& report) {
  out << "k,lambda,residual,multiplicity_cluster,method\n";
  char buf[160];
  for (const auto& e : report.entries) {
    std::snprintf(buf, sizeof buf, "%d,%.15g,%.6e,%d,%s\n", e.k, e.lambda, e.residual, e.cluster,
                  to_string(e.method));
    out << buf;
  }
}

std::string spectrum_to_json(const SpectrumReport& report, bool include_eigenfields) {
  nlohmann::ordered_json doc;
  doc["schema"] = "finsler-spectra/spectrum/1";
  doc["metric_id"] = report.metric_id;
  doc["measure_kind"] = report.measure_kind;
  doc["mesh_id"] = report.mesh_id;
  auto& arr = doc["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : report.entries) {
    nlohmann::ordered_json j;
    j["k"] = e.k;
    j["lambda"] = e.lambda;
    j["residual"] = e.residual;
    j["multiplicity_cluster"] = e.cluster;
    j["multiplicity"] = report.multiplicity(e.cluster);
    j["method"] = to_string(e.method);
    j["upper_bound_candidate"] = e.upper_bound_candidate;
    if (std::isfinite(e.minimax_upper)) j["minimax_upper"] = e.minimax_upper;
    if (include_eigenfields)
      j["eigenfield"] = std::vector<double>(e.eigenfield.values.data(),
                                            e.eigenfield.values.data() + e.eigenfield.values.size());
    arr.push_back(std::move(j));
  }
  return doc.dump(2);
}

}  // namespace finsler
