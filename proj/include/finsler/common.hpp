// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <utility>

namespace finsler {

/// Tangent vectors and covectors at a point. Charts have dimension 1 or 2, so
/// the storage never touches the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

/// Where a spatially varying quantity is sampled. Flat charts use (x, y);
/// the circle chart records its angle in `theta` and the embedding in (x, y);
/// the sphere uses the embedded point (x, y, z) and its polar angle.
struct Location {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double theta = 0.0;
};

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A quantity that is undefined at the requested point, e.g. the fundamental
/// tensor of a non-Riemannian norm at y = 0.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericFailure : public std::runtime_error {
 public:
  explicit NumericFailure(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Thrown when no descent run reaches stationarity. Carries the best iterate.
class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, Eigen::VectorXd best, double value,
                     double residual)
      : std::runtime_error(what), best_(std::move(best)), value_(value), residual_(residual) {}
  const Eigen::VectorXd& best_iterate() const noexcept { return best_; }
  double best_value() const noexcept { return value_; }
  double best_residual() const noexcept { return residual_; }

 private:
  Eigen::VectorXd best_;
  double value_;
  double residual_;
};

}  // namespace finsler
