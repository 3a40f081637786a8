// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "finsler/experiment.hpp"
#include "finsler/svg.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace finsler;

namespace {

std::string minimal(const std::string& extra = "") {
  return R"({"schema": "finsler-spectra/1", "mesh": {"model": "circle", "n": 32}, "metric": {"kind": "euclidean"})" +
         extra + "}";
}

ConfigError config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a config error");
  return ConfigError("", 0, 0);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("expressions") {
  Location at{0.5, -2.0, 3.0, std::numbers::pi / 3};
  CHECK(Expression::parse("1 + 2 * 3")(at) == 7.0);
  CHECK(Expression::parse("2^3^2")(at) == 512.0);
  CHECK(Expression::parse("-2^2")(at) == -4.0);
  CHECK(Expression::parse("(1 + x) * y")(at) == -3.0);
  CHECK(Expression::parse("cos(theta)")(at) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(Expression::parse("sqrt(abs(y)) + exp(0) + log(e) + z")(at) == doctest::Approx(std::sqrt(2.0) + 5.0));
  CHECK(Expression::parse("sin(pi/2) - tanh(0) + cosh(0) * sinh(0) + tan(0)")(at) == doctest::Approx(1.0));
  CHECK(Expression::parse("1.5e-1")(at) == 0.15);
  CHECK(Expression::parse("0.5*cos(theta)").is_constant() == false);
  CHECK(Expression::parse("2*pi").is_constant());
}

TEST_CASE("expression errors carry a column") {
  auto column_of = [](const std::string& s) -> std::size_t {
    try {
      Expression::parse(s);
    } catch (const ExpressionError& e) {
      return e.column();
    }
    return 0;
  };
  CHECK(column_of("1 + foo") == 5);
  CHECK(column_of("(1 + 2") == 7);
  CHECK(column_of("1 +") == 4);
  CHECK(column_of("2 $ 3") == 3);
  CHECK(column_of("sin 3") == 5);
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(minimal(R"(, "solver": {"k_max": 4, "seed": 99}, "measure": {"kind": "ht"})"));
  CHECK(c.k_max == 4);
  CHECK(c.solver.seed == 99);
  CHECK(c.measure.kind == MeasureKind::holmes_thompson);
  CHECK(uses_linear_solver(c));
  const ExperimentConfig r = parse_config(R"j({"schema": "finsler-spectra/1",
    "mesh": {"model": "torus", "n": 8},
    "metric": {"kind": "randers", "a": [[1, 0], [0, "1 + 0.2*sin(2*pi*x)"]], "b": [0.2, 0], "symmetrize": true}})j");
  CHECK_FALSE(uses_linear_solver(r));
  const MetricSpec spec = build_metric(r);
  CHECK_FALSE(spec.spatially_constant);
  CHECK(spec.at(Location{0.25, 0}).a()(1, 1) == doctest::Approx(1.2));
  const Mesh m = build_mesh(r);
  CHECK(m.num_nodes == 64);
}

TEST_CASE("syntax errors report line and column") {
  const ConfigError e = config_error("{\n  \"schema\": \"finsler-spectra/1\",\n  \"mesh\": {\"model\": \"circle\" \"n\": 8}\n}");
  CHECK(e.line() == 3);
  CHECK(e.column() == 32);
}

TEST_CASE("semantic errors point at the offending value") {
  ConfigError e = config_error("{\"schema\": \"finsler-spectra/1\",\n \"mesh\": {\"model\": \"circle\", \"n\": -3},\n \"metric\": {\"kind\": \"euclidean\"}}");
  CHECK(e.pointer() == "/mesh/n");
  CHECK(e.line() == 2);
  CHECK(e.column() == 35);
  e = config_error(minimal(R"j(, "measure": {"kind": "weighted_riemannian", "weight": "cos(q)"})j"));
  CHECK(e.pointer() == "/measure/weight");
  e = config_error(R"({"schema": "finsler-spectra/2"})");
  CHECK(e.pointer() == "/schema");
  e = config_error(minimal(R"(, "solver": {"k_max": 4, "kmax": 3})"));
  CHECK(e.pointer() == "/solver/kmax");
  e = config_error(minimal(R"(, "bakry_emery": {"cross_validate": true})"));
  CHECK(e.pointer() == "/bakry_emery/cross_validate");
  e = config_error(R"({"schema": "finsler-spectra/1", "mesh": {"model": "disk", "n": 8}, "metric": {"kind": "euclidean"}, "bounds": {"N": 2}})");
  CHECK(e.pointer() == "/bounds/enabled");
  e = config_error(R"({"schema": "finsler-spectra/1", "mesh": {"model": "circle", "n": 8}, "metric": {"kind": "randers", "b": [0.2]}, "solver": {"mode": "linear"}})");
  CHECK(e.pointer() == "/solver/mode");
  e = config_error(R"({"schema": "finsler-spectra/1", "mesh": {"model": "torus", "n": 8}, "metric": {"kind": "riemannian", "a": [[1, 0.1], [0, 1]]}})");
  CHECK(e.pointer() == "/metric/a/1/0");
}

TEST_CASE("overrides") {
  ExperimentConfig c = parse_config(minimal());
  Overrides o;
  o.seed = 5;
  o.slack = 0.1;
  o.levels = 4;
  apply_overrides(c, o);
  CHECK(c.solver.seed == 5);
  CHECK(c.bounds.slack == 0.1);
  CHECK(c.convergence.levels == 4);
  Overrides bad;
  bad.levels = 1;
  CHECK_THROWS_AS(apply_overrides(c, bad), InvalidArgument);
}

TEST_CASE("convergence study") {
  ExperimentConfig c = parse_config(R"({"schema": "finsler-spectra/1", "mesh": {"model": "circle", "n": 64},
      "metric": {"kind": "euclidean"}, "solver": {"k_max": 3}})");
  const ConvergenceTable t = convergence_study(c, 3);
  CHECK(t.resolutions == std::vector<int>{64, 128, 256});
  CHECK(std::isnan(t.order[0]));
  CHECK(t.order[1] == doctest::Approx(2.0).epsilon(0.15));
  CHECK_THROWS_AS(convergence_study(c, 1), InvalidArgument);
  CHECK(refined_mesh(MeshParams{MeshModel::icosphere, 2}, 2).n == 4);
  CHECK(refined_mesh(MeshParams{MeshModel::torus, 8, 4}, 1).ny == 8);
}

TEST_CASE("icosphere convergence order") {
  ExperimentConfig c = parse_config(R"({"schema": "finsler-spectra/1", "mesh": {"model": "icosphere", "n": 2},
      "metric": {"kind": "euclidean"}, "solver": {"k_max": 2}})");
  const ConvergenceTable t = convergence_study(c, 3);
  CHECK(t.order[1] >= 1.7);
}

TEST_CASE("runs write deterministic artifacts") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "finsler_experiment_test";
  fs::remove_all(dir);
  ExperimentConfig c = parse_config(R"({"schema": "finsler-spectra/1", "mesh": {"model": "torus", "n": 8},
      "metric": {"kind": "randers", "b": [0.2, 0.1]}, "solver": {"k_max": 3, "seed": 4},
      "bounds": {"N": 2, "K": 0, "d": "measure", "k_max": 2, "slack": 0.05}, "packing": {"radius": 0.2}})");
  Overrides o;
  o.out_dir = (dir / "a").string();
  apply_overrides(c, o);
  const RunOutcome a = run_experiment(c);
  CHECK(a.status == kExitOk);
  o.out_dir = (dir / "b").string();
  apply_overrides(c, o);
  const RunOutcome b = run_experiment(c);
  REQUIRE(a.artifacts.size() == b.artifacts.size());
  for (std::size_t i = 0; i < a.artifacts.size(); ++i) CHECK(slurp(a.artifacts[i]) == slurp(b.artifacts[i]));
  fs::remove_all(dir);
}

TEST_CASE("SVG plots") {
  const std::string s = render_svg(eigenvalue_staircase({0, 1, 1, 4, 4}, "a < b"));
  CHECK(s.find("<svg") != std::string::npos);
  CHECK(s.find("<polyline") != std::string::npos);
  CHECK(s.find("a &lt; b") != std::string::npos);
  const Plot p = counting_function_plot({0, 1, 1, 4}, "N");
  CHECK(p.series[0].points.back().second == 4.0);
}
