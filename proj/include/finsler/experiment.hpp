// SPDX-License-Identifier: Apache-2.0
//
// Declarative experiments: a JSON document names a mesh, a metric, a measure,
// solver settings, bound checks and outputs. The runners build the objects,
// solve, check and write the artifacts.
#pragma once

#include "finsler/bounds.hpp"
#include "finsler/expression.hpp"
#include "finsler/mesh.hpp"
#include "finsler/metric.hpp"

#include <optional>
#include <string>
#include <vector>

namespace finsler {

inline constexpr const char* kConfigSchema = "finsler-spectra/1";

/// Malformed or inconsistent configuration. Line and column are 1-based and 0
/// when unknown; `pointer` is the JSON pointer of the offending value.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& message, int line, int column, std::string pointer = {});
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  int line_;
  int column_;
  std::string pointer_;
};

enum class MetricKind { euclidean, riemannian, randers };
enum class SolverMode { automatic, linear, nonlinear };

struct MetricDescription {
  MetricKind kind = MetricKind::euclidean;
  /// Row-major dim x dim entries of a (empty for euclidean).
  std::vector<Expression> a;
  std::vector<Expression> b;
  bool symmetrize = true;
};

struct MeasureDescription {
  MeasureKind kind = MeasureKind::busemann_hausdorff;
  std::optional<Expression> weight;   ///< f in e^{-f} dvol (weighted_riemannian)
  std::optional<Expression> density;  ///< sigma (custom)
};

struct BoundsSection {
  bool enabled = false;
  double N = 2.0;
  double K = 0.0;
  std::optional<double> d;       ///< nullopt: measured graph diameter
  std::optional<double> Theta;   ///< nullopt: sampled distortion bound
  std::optional<double> Lambda;  ///< nullopt: sampled uniformity constant
  double slack = 0.02;
  int k_max = 5;
  std::optional<double> cheeger_radius;
  double continuum_factor = 4.0;
};

struct CrossValidationSection {
  bool enabled = false;
  int k_max = 4;
  double tolerance = 1e-4;
  std::optional<double> N_effective;
};

struct ConvergenceSection {
  int levels = 3;
  std::optional<double> expected_order;
  double order_tolerance = 0.3;
};

struct OutputSection {
  std::string dir = ".";
  std::string prefix = "spectra";
  bool json = true;
  bool svg = true;
  bool eigenfields = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  MeshParams mesh;
  std::optional<std::string> mesh_file;  ///< resolved path of a plain-text mesh
  MetricDescription metric;
  MeasureDescription measure;
  SolverMode mode = SolverMode::automatic;
  int k_max = 5;
  SolverConfig solver;
  BoundsSection bounds;
  CrossValidationSection cross_validation;
  std::optional<double> packing_radius;
  ConvergenceSection convergence;
  OutputSection output;
};

/// Parses and validates a config document. Relative mesh paths resolve
/// against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

int mesh_dimension(const ExperimentConfig& config);
Mesh build_mesh(const ExperimentConfig& config);
MetricSpec build_metric(const ExperimentConfig& config);
MeasureDensity build_measure(const ExperimentConfig& config, const MetricSpec& metric);
bool uses_linear_solver(const ExperimentConfig& config);

/// Command-line overrides.
struct Overrides {
  std::optional<unsigned long long> seed;
  std::optional<std::string> out_dir;
  std::optional<double> slack;
  std::optional<int> levels;
  std::optional<double> radius;
};
void apply_overrides(ExperimentConfig& config, const Overrides& overrides);

/// Exit statuses of the runners.
enum ExitStatus { kExitOk = 0, kExitError = 1, kExitCheckFailed = 2 };

struct RunOutcome {
  int status = kExitOk;
  std::vector<std::string> artifacts;
  std::vector<std::string> messages;
};

/// Spectrum, plus cross-validation, bounds and packing when configured.
RunOutcome run_experiment(const ExperimentConfig& config);
/// Spectrum and the comparison bounds (enabled regardless of the toggle).
RunOutcome run_bounds(const ExperimentConfig& config);
/// Packing, covering and region diagnostics at `packing_radius`.
RunOutcome run_packing(const ExperimentConfig& config);
/// Spectra on geometrically refined meshes and estimated orders.
RunOutcome run_convergence(const ExperimentConfig& config);

struct ConvergenceTable {
  std::vector<int> resolutions;
  /// lambdas[level][k-1]
  std::vector<std::vector<double>> lambdas;
  /// Order from the three finest levels; NaN when undetermined.
  std::vector<double> order;
};
/// Mesh parameters at refinement level i: resolution n 2^i (icosphere level + i).
MeshParams refined_mesh(const MeshParams& base, int level);
ConvergenceTable convergence_study(const ExperimentConfig& config, int levels);
/// log2(|l0 - l1| / |l1 - l2|) for successive halvings; NaN when degenerate.
double estimated_order(double coarse, double middle, double fine);

}  // namespace finsler
