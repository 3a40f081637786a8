// SPDX-License-Identifier: Apache-2.0
#include "finsler/bakry_emery.hpp"
#include "finsler/bounds.hpp"
#include "finsler/experiment.hpp"
#include "finsler/packing.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace finsler;

namespace {

Vec to_vec(const Eigen::VectorXd& v) {
  if (v.size() < 1 || v.size() > 2) throw InvalidArgument("vectors must have 1 or 2 components");
  return Vec(v);
}

Mat to_mat(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > 2) throw InvalidArgument("matrices must be 1x1 or 2x2");
  return Mat(m);
}

py::list entries(const SpectrumReport& r) {
  py::list out;
  for (const auto& e : r.entries) {
    py::dict d;
    d["k"] = e.k;
    d["lambda"] = e.lambda;
    d["residual"] = e.residual;
    d["cluster"] = e.cluster;
    d["method"] = to_string(e.method);
    d["upper_bound_candidate"] = e.upper_bound_candidate;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finsler-Laplacian spectra on simplicial meshes.";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SingularityError>(m, "SingularityError", PyExc_ArithmeticError);
  py::register_exception<NumericFailure>(m, "NumericFailure", PyExc_RuntimeError);
  py::register_exception<ConvergenceFailure>(m, "ConvergenceFailure", PyExc_RuntimeError);

  py::class_<Mesh>(m, "Mesh")
      .def_readonly("dimension", &Mesh::dimension)
      .def_readonly("id", &Mesh::id)
      .def_readonly("num_nodes", &Mesh::num_nodes)
      .def_readonly("num_dofs", &Mesh::num_dofs)
      .def_property_readonly("closed", &Mesh::closed)
      .def_property_readonly("num_elements", [](const Mesh& mesh) { return mesh.elements.size(); })
      .def("__repr__", [](const Mesh& mesh) { return "<Mesh " + mesh.id + ">"; });

  m.def("make_circle", &make_circle, py::arg("n"), py::arg("circumference") = 2.0 * 3.14159265358979323846);
  m.def("make_interval", &make_interval, py::arg("n"), py::arg("length") = 1.0);
  m.def("make_torus", &make_torus, py::arg("nx"), py::arg("ny"), py::arg("lx") = 1.0, py::arg("ly") = 1.0);
  m.def("make_disk", &make_disk, py::arg("rings"), py::arg("radius") = 1.0);
  m.def("make_icosphere", &make_icosphere, py::arg("level"));

  py::class_<MinkowskiNorm>(m, "MinkowskiNorm")
      .def_static("riemannian", [](const Eigen::MatrixXd& a) { return MinkowskiNorm::riemannian(to_mat(a)); })
      .def_static(
          "randers",
          [](const Eigen::MatrixXd& a, const Eigen::VectorXd& b, bool symmetrize) {
            return MinkowskiNorm::randers(to_mat(a), to_vec(b), symmetrize);
          },
          py::arg("a"), py::arg("b"), py::arg("symmetrize") = false)
      .def_static("euclidean", &MinkowskiNorm::euclidean)
      .def_property_readonly("dim", &MinkowskiNorm::dim)
      .def_property_readonly("quadratic", &MinkowskiNorm::quadratic)
      .def("__call__", [](const MinkowskiNorm& n, const Eigen::VectorXd& y) { return n(to_vec(y)); })
      .def("dual", [](const MinkowskiNorm& n, const Eigen::VectorXd& eta) { return n.dual(to_vec(eta)); })
      .def("legendre", [](const MinkowskiNorm& n, const Eigen::VectorXd& x) { return Eigen::VectorXd(n.legendre(to_vec(x))); })
      .def("legendre_inv",
           [](const MinkowskiNorm& n, const Eigen::VectorXd& eta) { return Eigen::VectorXd(n.legendre_inv(to_vec(eta))); })
      .def("fundamental_tensor",
           [](const MinkowskiNorm& n, const Eigen::VectorXd& y) { return Eigen::MatrixXd(n.fundamental_tensor(to_vec(y))); })
      .def("uniformity_constant", [](const MinkowskiNorm& n, int res) { return uniformity_constant(n, res); },
           py::arg("resolution") = 256)
      .def("measure_density", [](const MinkowskiNorm& n, const std::string& kind) {
        return measure_density(n, measure_kind_from_string(kind));
      });

  py::class_<MetricSpec>(m, "MetricSpec")
      .def_static("constant", &MetricSpec::constant, py::arg("norm"), py::arg("id") = "metric")
      .def_static("euclidean", &MetricSpec::euclidean)
      .def_readonly("dimension", &MetricSpec::dimension)
      .def_readonly("id", &MetricSpec::id);

  py::class_<MeasureDensity>(m, "MeasureDensity")
      .def_property_readonly("kind", [](const MeasureDensity& d) { return std::string(to_string(d.kind)); })
      .def_readonly("id", &MeasureDensity::id);
  m.def("canonical_measure", [](const MetricSpec& s, const std::string& kind) {
    return canonical_measure(s, measure_kind_from_string(kind));
  }, py::arg("metric"), py::arg("kind") = "busemann_hausdorff");

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("descent_tolerance", &SolverConfig::descent_tolerance)
      .def_readwrite("max_iterations", &SolverConfig::max_iterations)
      .def_readwrite("restarts", &SolverConfig::restarts)
      .def_readwrite("multiplicity_gap", &SolverConfig::multiplicity_gap)
      .def_readwrite("acceptance_residual", &SolverConfig::acceptance_residual)
      .def_readwrite("seed", &SolverConfig::seed);

  py::class_<FemProblem>(m, "FemProblem")
      .def(py::init([](const Mesh& mesh, const MetricSpec& metric, const MeasureDensity& measure) {
             return std::make_unique<FemProblem>(mesh, metric, measure);
           }),
           py::arg("mesh"), py::arg("metric"), py::arg("measure"))
      .def_property_readonly("num_dofs", &FemProblem::num_dofs)
      .def_property_readonly("quadratic", &FemProblem::quadratic)
      .def("energy", [](const FemProblem& p, const Eigen::VectorXd& u) { return energy_numerator(p, u); })
      .def("energy_gradient", [](const FemProblem& p, const Eigen::VectorXd& u) { return energy_gradient(p, u); })
      .def("rayleigh", [](const FemProblem& p, const Eigen::VectorXd& u) { return rayleigh(p, u); });

  m.def("linear_spectrum", [](const FemProblem& p, int k_max) { return entries(solve_linear_spectrum(p, k_max)); },
        py::arg("problem"), py::arg("k_max"));
  m.def("nonlinear_spectrum",
        [](const FemProblem& p, int k_max, const SolverConfig& c) { return entries(solve_nonlinear_higher(p, k_max, c)); },
        py::arg("problem"), py::arg("k_max"), py::arg("config") = SolverConfig{});

  m.def("spaceform_ball_eigen", &spaceform_ball_eigen, py::arg("N"), py::arg("K"), py::arg("r"));
  m.def("V_nK", &V_nK, py::arg("n"), py::arg("K"), py::arg("r"));
  m.def("cheng_bound", [](double N, double K, double d, int k) {
    CurvatureAssumption a;
    a.N = N;
    a.K = K;
    a.d = d;
    return cheng_bound(a, k);
  }, py::arg("N"), py::arg("K"), py::arg("d"), py::arg("k"));

  m.def("diameter", [](const Mesh& mesh, const MetricSpec& s) { return DistanceOracle(mesh, s).diameter(); });
  m.def("packing_number", [](const Mesh& mesh, const MetricSpec& s, double r) {
    return packing_number(DistanceOracle(mesh, s), r);
  });
  m.def("covering_number", [](const Mesh& mesh, const MetricSpec& s, double r) {
    return covering_number(DistanceOracle(mesh, s), r);
  });
  m.def("cheeger_constant", [](const FemProblem& p) {
    const CutGraph g(p);
    return cheeger_constant(g, whole_domain(g)).value;
  });

  m.def("run_config", [](const std::string& path, std::optional<std::string> out_dir, std::optional<unsigned long long> seed) {
    ExperimentConfig c = load_config(path);
    Overrides o;
    o.out_dir = out_dir;
    o.seed = seed;
    apply_overrides(c, o);
    const RunOutcome r = run_experiment(c);
    return py::make_tuple(r.status, r.artifacts, r.messages);
  }, py::arg("path"), py::arg("out_dir") = std::nullopt, py::arg("seed") = std::nullopt);
  m.def("parse_config", [](const std::string& text) {
    const ExperimentConfig c = parse_config(text);
    return c.name;
  });
  m.def("estimated_order", &estimated_order);
}
