// SPDX-License-Identifier: Apache-2.0
#include "finsler/metric.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace finsler {

namespace {

constexpr double kPi = std::numbers::pi;

bool all_finite(const Vec& v) { return v.allFinite(); }

Vec unit_direction(double angle) {
  Vec u(2);
  u << std::cos(angle), std::sin(angle);
  return u;
}

// Trapezoid rule on a periodic integrand over [0, 2 pi), doubling the node
// count until two successive values agree to `rel_tol`.
template <typename Integrand>
double periodic_quadrature(Integrand&& f, double rel_tol = 1e-8, int start_nodes = 64) {
  auto sum_at = [&](int nodes) {
    double s = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double v = f(2.0 * kPi * i / nodes);
      if (!std::isfinite(v)) throw NumericFailure("non-finite quadrature integrand");
      s += v;
    }
    return s * 2.0 * kPi / nodes;
  };
  double prev = sum_at(start_nodes);
  for (int nodes = 2 * start_nodes; nodes <= (1 << 20); nodes *= 2) {
    const double cur = sum_at(nodes);
    if (std::abs(cur - prev) <= rel_tol * std::abs(cur)) return cur;
    prev = cur;
  }
  throw NumericFailure("periodic quadrature did not converge", std::abs(prev));
}

}  // namespace

MinkowskiNorm::MinkowskiNorm(NormKind kind, Mat a, Vec b, bool symmetrize)
    : kind_(kind), a_(std::move(a)), b_(std::move(b)), symmetrize_(symmetrize) {
  const int n = static_cast<int>(a_.rows());
  if (n < 1 || n > 2 || a_.cols() != n || b_.size() != n)
    throw InvalidArgument("Minkowski norm: dimension must be 1 or 2 with matching a and b");
  if (!a_.allFinite() || !b_.allFinite()) throw InvalidArgument("Minkowski norm: non-finite data");
  if ((a_ - a_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + a_.cwiseAbs().maxCoeff()))
    throw InvalidArgument("Minkowski norm: a is not symmetric");
  a_ = 0.5 * (a_ + a_.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(a_);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw InvalidArgument("Minkowski norm: a is not positive definite");
  a_inv_ = a_.inverse();
  if (kind_ == NormKind::randers) {
    const double bnorm = std::sqrt(b_.dot(a_inv_ * b_));
    if (bnorm >= 1.0) throw InvalidArgument("Randers norm: |b| must be < 1 in the dual of a");
  }
}

MinkowskiNorm MinkowskiNorm::riemannian(const Mat& a) {
  return MinkowskiNorm(NormKind::riemannian, a, Vec::Zero(a.rows()), false);
}

MinkowskiNorm MinkowskiNorm::randers(const Mat& a, const Vec& b, bool symmetrize) {
  return MinkowskiNorm(NormKind::randers, a, b, symmetrize);
}

MinkowskiNorm MinkowskiNorm::euclidean(int dim) {
  if (dim < 1 || dim > 2) throw InvalidArgument("euclidean norm: dimension must be 1 or 2");
  return riemannian(Mat::Identity(dim, dim));
}

double MinkowskiNorm::raw(const Vec& y) const {
  return std::sqrt(std::max(0.0, y.dot(a_ * y))) + b_.dot(y);
}

Vec MinkowskiNorm::raw_gradient(const Vec& y) const {
  const double alpha = std::sqrt(y.dot(a_ * y));
  return a_ * y / alpha + b_;
}

double MinkowskiNorm::operator()(const Vec& y) const {
  if (y.size() != dim() || !all_finite(y)) throw InvalidArgument("norm evaluation: bad vector");
  if (kind_ == NormKind::riemannian) return std::sqrt(std::max(0.0, y.dot(a_ * y)));
  if (symmetrize_) return 0.5 * (raw(y) + raw(-y));
  return raw(y);
}

Vec MinkowskiNorm::gradient(const Vec& y) const {
  if (y.isZero(0.0)) throw SingularityError("norm gradient undefined at y = 0");
  if (kind_ == NormKind::riemannian) return a_ * y / std::sqrt(y.dot(a_ * y));
  if (symmetrize_) return 0.5 * (raw_gradient(y) - raw_gradient(-y));
  return raw_gradient(y);
}

Mat MinkowskiNorm::fundamental_tensor(const Vec& y) const {
  if (kind_ == NormKind::riemannian) return a_;
  if (y.size() != dim() || !all_finite(y)) throw InvalidArgument("fundamental tensor: bad vector");
  if (y.isZero(0.0)) throw SingularityError("fundamental tensor undefined at y = 0");
  // Central differences of the exact first derivative of F^2/2, i.e. F * dF/dy.
  const int n = dim();
  const double h = 1e-5 * (1.0 + y.norm());
  Mat g(n, n);
  for (int j = 0; j < n; ++j) {
    Vec yp = y, ym = y;
    yp(j) += h;
    ym(j) -= h;
    const Vec dp = (*this)(yp) * gradient(yp);
    const Vec dm = (*this)(ym) * gradient(ym);
    g.col(j) = (dp - dm) / (2.0 * h);
  }
  return 0.5 * (g + g.transpose());
}

double MinkowskiNorm::dual(const Vec& eta) const {
  if (eta.size() != dim() || !all_finite(eta)) throw InvalidArgument("dual norm: bad covector");
  if (eta.isZero(0.0)) return 0.0;
  if (kind_ == NormKind::riemannian) return std::sqrt(std::max(0.0, eta.dot(a_inv_ * eta)));

  if (dim() == 1) {
    Vec plus(1), minus(1);
    plus << 1.0;
    minus << -1.0;
    return eta(0) > 0 ? eta(0) / (*this)(plus) : -eta(0) / (*this)(minus);
  }

  // sup over directions of eta(u) / F(u): coarse angular scan, then golden
  // section on the bracketing cell. The ratio is unimodal on the circle for
  // strictly convex norms.
  auto ratio = [&](double t) {
    const Vec u = unit_direction(t);
    return eta.dot(u) / (*this)(u);
  };
  constexpr int grid = 64;
  int best = 0;
  double best_val = -1.0e300;
  for (int i = 0; i < grid; ++i) {
    const double v = ratio(2.0 * kPi * i / grid);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double step = 2.0 * kPi / grid;
  double lo = (best - 1) * step, hi = (best + 1) * step;
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = ratio(x1), f2 = ratio(x2);
  double prev = std::max(f1, f2);
  for (int it = 0; it < 200; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = ratio(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = ratio(x1);
    }
    const double cur = std::max(f1, f2);
    if (hi - lo < 1e-12 || (it > 8 && std::abs(cur - prev) <= 1e-12 * std::abs(cur) && hi - lo < 1e-7))
      break;
    prev = cur;
  }
  return std::max({best_val, f1, f2});
}

Vec MinkowskiNorm::legendre(const Vec& X) const {
  if (X.size() != dim() || !all_finite(X)) throw InvalidArgument("legendre: bad vector");
  if (X.isZero(0.0)) return Vec::Zero(dim());
  if (kind_ == NormKind::riemannian) return a_ * X;
  return (*this)(X) * gradient(X);
}

Vec MinkowskiNorm::legendre_inv(const Vec& eta) const {
  if (eta.size() != dim() || !all_finite(eta)) throw InvalidArgument("legendre_inv: bad covector");
  if (eta.isZero(0.0)) return Vec::Zero(dim());
  if (kind_ == NormKind::riemannian) return a_inv_ * eta;

  const double scale = std::sqrt(eta.dot(a_inv_ * eta));
  Vec y = a_inv_ * eta;
  auto residual_of = [&](const Vec& v) {
    const Vec r = legendre(v) - eta;
    return std::sqrt(r.dot(a_inv_ * r));
  };
  double res = residual_of(y);
  for (int it = 0; it < 100; ++it) {
    if (res <= 1e-13 * scale) break;
    const Mat g = fundamental_tensor(y);
    const Vec step = g.ldlt().solve(legendre(y) - eta);
    double t = 1.0;
    Vec trial = y - step;
    double trial_res = residual_of(trial);
    while (trial_res > res && t > 1e-6) {
      t *= 0.5;
      trial = y - t * step;
      trial_res = residual_of(trial);
    }
    if (trial_res >= res) break;
    y = trial;
    res = trial_res;
  }
  // F >= (1 - |b|) alpha, so alpha*(r) / (1 - |b|) bounds F*(r) from above.
  const Vec r = legendre(y) - eta;
  const double bnorm = std::sqrt(b_.dot(a_inv_ * b_));
  const double dual_res = std::sqrt(r.dot(a_inv_ * r)) / (1.0 - bnorm);
  if (dual_res > 1e-10 * std::max(1.0, (*this)(y)))
    throw NumericFailure("legendre inversion did not converge", dual_res);
  return y;
}

MinkowskiNorm MetricSpec::at(const Location& x) const {
  if (!field) throw InvalidArgument("metric spec has no field");
  MinkowskiNorm norm = field(x);
  if (norm.dim() != dimension) throw InvalidArgument("metric field returned wrong dimension");
  return norm;
}

MetricSpec MetricSpec::constant(const MinkowskiNorm& norm, std::string id) {
  MetricSpec spec;
  spec.dimension = norm.dim();
  spec.field = [norm](const Location&) { return norm; };
  spec.id = std::move(id);
  spec.spatially_constant = true;
  return spec;
}

MetricSpec MetricSpec::euclidean(int dim) {
  return constant(MinkowskiNorm::euclidean(dim), "euclidean");
}

const char* to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::busemann_hausdorff: return "busemann_hausdorff";
    case MeasureKind::holmes_thompson: return "holmes_thompson";
    case MeasureKind::weighted_riemannian: return "weighted_riemannian";
    case MeasureKind::custom: return "custom";
  }
  return "unknown";
}

MeasureKind measure_kind_from_string(const std::string& name) {
  if (name == "busemann_hausdorff" || name == "bh") return MeasureKind::busemann_hausdorff;
  if (name == "holmes_thompson" || name == "ht") return MeasureKind::holmes_thompson;
  if (name == "weighted_riemannian" || name == "weighted") return MeasureKind::weighted_riemannian;
  if (name == "custom") return MeasureKind::custom;
  throw InvalidArgument("unknown measure kind '" + name + "'");
}

double eval_norm(const MetricSpec& spec, const Location& x, const Vec& y) { return spec.at(x)(y); }

Mat fundamental_tensor(const MetricSpec& spec, const Location& x, const Vec& y) {
  return spec.at(x).fundamental_tensor(y);
}

double dual_norm(const MetricSpec& spec, const Location& x, const Vec& eta) {
  return spec.at(x).dual(eta);
}

Vec legendre(const MetricSpec& spec, const Location& x, const Vec& X) { return spec.at(x).legendre(X); }

Vec legendre_inv(const MetricSpec& spec, const Location& x, const Vec& eta) {
  return spec.at(x).legendre_inv(eta);
}

double uniformity_constant(const MinkowskiNorm& norm, int resolution) {
  if (resolution < 8) throw InvalidArgument("uniformity constant: resolution must be >= 8");
  if (norm.quadratic()) return 1.0;
  std::vector<Vec> dirs;
  if (norm.dim() == 1) {
    Vec p(1), m(1);
    p << 1.0;
    m << -1.0;
    dirs = {p, m};
  } else {
    dirs.reserve(resolution);
    for (int i = 0; i < resolution; ++i) dirs.push_back(unit_direction(2.0 * kPi * i / resolution));
  }
  std::vector<Mat> tensors;
  tensors.reserve(dirs.size());
  for (const Vec& d : dirs) tensors.push_back(norm.fundamental_tensor(d));
  double lambda = 1.0;
  for (const Vec& y : dirs) {
    double hi = 0.0, lo = 1.0e300;
    for (const Mat& g : tensors) {
      const double q = y.dot(g * y);
      hi = std::max(hi, q);
      lo = std::min(lo, q);
    }
    lambda = std::max(lambda, hi / lo);
  }
  return lambda;
}

double uniformity_constant(const MetricSpec& spec, std::span<const Location> region, int resolution) {
  if (resolution < 8) throw InvalidArgument("uniformity constant: resolution must be >= 8");
  double lambda = 1.0;
  for (const Location& x : region) lambda = std::max(lambda, uniformity_constant(spec.at(x), resolution));
  return lambda;
}

Mat average_metric(const MinkowskiNorm& norm, int quadrature_points) {
  const int n = norm.dim();
  if (norm.quadratic()) return norm.a();
  if (n == 1) {
    Vec p(1), m(1);
    p << 1.0;
    m << -1.0;
    return 0.5 * (norm.fundamental_tensor(p) + norm.fundamental_tensor(m));
  }
  if (quadrature_points < 64) throw InvalidArgument("average metric: need >= 64 quadrature nodes");
  Mat acc = Mat::Zero(2, 2);
  double total = 0.0;
  for (int i = 0; i < quadrature_points; ++i) {
    const double t = 2.0 * kPi * i / quadrature_points;
    const Vec u = unit_direction(t);
    Vec du(2);
    du << -std::sin(t), std::cos(t);
    const double f = norm(u);
    const Vec y = u / f;
    // Tangent of the indicatrix curve t -> u(t) / F(u(t)).
    const Vec dy = du / f - u * norm.gradient(u).dot(du) / (f * f);
    const Mat g = norm.fundamental_tensor(y);
    const double w = std::sqrt(dy.dot(g * dy));
    acc += w * g;
    total += w;
  }
  return acc / total;
}

Mat average_metric(const MetricSpec& spec, const Location& x, int quadrature_points) {
  return average_metric(spec.at(x), quadrature_points);
}

double measure_density(const MinkowskiNorm& norm, MeasureKind kind) {
  if (kind != MeasureKind::busemann_hausdorff && kind != MeasureKind::holmes_thompson)
    throw InvalidArgument("measure_density: kind must be busemann_hausdorff or holmes_thompson");
  if (norm.quadratic()) return std::sqrt(norm.a().determinant());
  if (norm.dim() == 1) {
    Vec p(1), m(1);
    p << 1.0;
    m << -1.0;
    const double fp = norm(p), fm = norm(m);
    if (kind == MeasureKind::busemann_hausdorff) return 2.0 / (1.0 / fp + 1.0 / fm);
    return 0.5 * (fp + fm);
  }
  if (kind == MeasureKind::busemann_hausdorff) {
    // vol{F < 1} = 1/2 int F(u)^-2 dtheta.
    const double vol = 0.5 * periodic_quadrature([&](double t) {
      const double f = norm(unit_direction(t));
      return 1.0 / (f * f);
    });
    return kPi / vol;
  }
  const double integral = 0.5 * periodic_quadrature([&](double t) {
    const Vec u = unit_direction(t);
    const double f = norm(u);
    return norm.fundamental_tensor(u).determinant() / (f * f);
  });
  return integral / kPi;
}

double measure_density(const MetricSpec& spec, const Location& x, MeasureKind kind) {
  return measure_density(spec.at(x), kind);
}

MeasureDensity canonical_measure(const MetricSpec& spec, MeasureKind kind) {
  if (kind != MeasureKind::busemann_hausdorff && kind != MeasureKind::holmes_thompson)
    throw InvalidArgument("canonical_measure: kind must be busemann_hausdorff or holmes_thompson");
  MeasureDensity m;
  m.kind = kind;
  m.id = std::string(to_string(kind)) + ":" + spec.id;
  if (spec.spatially_constant) {
    const double sigma = measure_density(spec.at(Location{}), kind);
    m.sigma = [sigma](const Location&) { return sigma; };
  } else {
    m.sigma = [spec, kind](const Location& x) { return measure_density(spec, x, kind); };
  }
  return m;
}

MeasureDensity custom_measure(std::function<double(const Location&)> sigma, std::string id) {
  MeasureDensity m;
  m.kind = MeasureKind::custom;
  m.sigma = std::move(sigma);
  m.id = std::move(id);
  return m;
}

double distortion(const MinkowskiNorm& norm, const Vec& y, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("distortion: sigma must be positive");
  return std::log(std::sqrt(norm.fundamental_tensor(y).determinant()) / sigma);
}

double distortion(const MetricSpec& spec, const Location& x, const Vec& y, double sigma) {
  return distortion(spec.at(x), y, sigma);
}

}  // namespace finsler
