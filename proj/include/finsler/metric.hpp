// SPDX-License-Identifier: Apache-2.0
//
// Pointwise Finsler metric algebra for Riemannian and Randers Minkowski norms:
// evaluation, fundamental tensor, dual norm, Legendre transform, uniformity
// constant, average metric, canonical measure densities and distortion.
#pragma once

#include "finsler/common.hpp"

#include <functional>
#include <span>
#include <string>

namespace finsler {

enum class NormKind { riemannian, randers };

/// F(y) = sqrt(a(y, y)) + b(y).  With `symmetrize` set the norm is replaced by
/// its reversible part (F(y) + F(-y)) / 2, which is what manifold-level
/// computations use.
class MinkowskiNorm {
 public:
  static MinkowskiNorm riemannian(const Mat& a);
  static MinkowskiNorm randers(const Mat& a, const Vec& b, bool symmetrize);
  static MinkowskiNorm euclidean(int dim);

  NormKind kind() const { return kind_; }
  bool symmetrized() const { return symmetrize_; }
  int dim() const { return static_cast<int>(a_.rows()); }
  const Mat& a() const { return a_; }
  const Vec& b() const { return b_; }

  /// True when F^2 is a quadratic form, so every derived object has a closed form.
  bool quadratic() const { return kind_ == NormKind::riemannian; }
  bool reversible() const { return quadratic() || symmetrize_ || b_.isZero(0.0); }

  double operator()(const Vec& y) const;
  /// dF/dy at y != 0.
  Vec gradient(const Vec& y) const;
  /// g_ij(y) = [F^2/2]_{y^i y^j}.
  Mat fundamental_tensor(const Vec& y) const;
  double dual(const Vec& eta) const;
  Vec legendre(const Vec& X) const;
  Vec legendre_inv(const Vec& eta) const;

 private:
  MinkowskiNorm(NormKind kind, Mat a, Vec b, bool symmetrize);
  double raw(const Vec& y) const;
  Vec raw_gradient(const Vec& y) const;

  NormKind kind_;
  Mat a_;
  Vec b_;
  Mat a_inv_;
  bool symmetrize_;
};

/// A Finsler metric on a chart: one Minkowski norm per location.
struct MetricSpec {
  int dimension = 2;
  std::function<MinkowskiNorm(const Location&)> field;
  std::string id = "metric";
  bool spatially_constant = false;

  MinkowskiNorm at(const Location& x) const;

  static MetricSpec constant(const MinkowskiNorm& norm, std::string id);
  static MetricSpec euclidean(int dim);
};

enum class MeasureKind { busemann_hausdorff, holmes_thompson, weighted_riemannian, custom };

const char* to_string(MeasureKind kind);
MeasureKind measure_kind_from_string(const std::string& name);

/// dm = sigma(x) dx^1 ... dx^n in chart coordinates.
struct MeasureDensity {
  MeasureKind kind = MeasureKind::busemann_hausdorff;
  std::function<double(const Location&)> sigma;
  std::string id = "measure";
};

double eval_norm(const MetricSpec& spec, const Location& x, const Vec& y);
Mat fundamental_tensor(const MetricSpec& spec, const Location& x, const Vec& y);
double dual_norm(const MetricSpec& spec, const Location& x, const Vec& eta);
Vec legendre(const MetricSpec& spec, const Location& x, const Vec& X);
Vec legendre_inv(const MetricSpec& spec, const Location& x, const Vec& eta);

/// Sampled lower estimate of sup g_X(Y,Y) / g_Z(Y,Y). `resolution` directions
/// per angular dimension; nested grids (resolution doubling) give a
/// nondecreasing sequence.
double uniformity_constant(const MinkowskiNorm& norm, int resolution);
double uniformity_constant(const MetricSpec& spec, std::span<const Location> region,
                           int resolution);

/// Average of g_y over the indicatrix against its induced Riemannian measure.
Mat average_metric(const MinkowskiNorm& norm, int quadrature_points = 128);
Mat average_metric(const MetricSpec& spec, const Location& x, int quadrature_points = 128);

/// Busemann-Hausdorff or Holmes-Thompson density of a single Minkowski norm.
double measure_density(const MinkowskiNorm& norm, MeasureKind kind);
double measure_density(const MetricSpec& spec, const Location& x, MeasureKind kind);

/// The canonical BH/HT measure of `spec` as a density field.
MeasureDensity canonical_measure(const MetricSpec& spec, MeasureKind kind);
/// Density sigma(x) given directly (kind = custom).
MeasureDensity custom_measure(std::function<double(const Location&)> sigma, std::string id);

/// tau(y) = log(sqrt(det g(y)) / sigma).
double distortion(const MinkowskiNorm& norm, const Vec& y, double sigma);
double distortion(const MetricSpec& spec, const Location& x, const Vec& y, double sigma);

}  // namespace finsler
