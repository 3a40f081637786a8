// SPDX-License-Identifier: Apache-2.0
#include "finsler/experiment.hpp"

#include "finsler/bakry_emery.hpp"
#include "finsler/packing.hpp"
#include "finsler/svg.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace finsler {

ConfigError::ConfigError(const std::string& message, int line, int column, std::string pointer)
    : InvalidArgument(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message
                               : message),
      line_(line),
      column_(column),
      pointer_(std::move(pointer)) {}

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Source positions of every value in a well-formed JSON text, keyed by JSON pointer.

class PositionIndex {
 public:
  explicit PositionIndex(const std::string& text) : s_(text) {
    skip();
    value("");
  }

  std::pair<int, int> find(std::string pointer) const {
    for (;;) {
      auto it = pos_.find(pointer);
      if (it != pos_.end()) return line_col(it->second);
      if (pointer.empty()) return {0, 0};
      pointer.erase(pointer.rfind('/'));
    }
  }

 private:
  std::pair<int, int> line_col(std::size_t offset) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < s_.size(); ++i) {
      if (s_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return {line, col};
  }

  void skip() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) ++i_;
  }

  std::string string() {
    std::string out;
    ++i_;
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
        ++i_;
        const char c = s_[i_];
        out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
      } else {
        out += s_[i_];
      }
      ++i_;
    }
    ++i_;
    return out;
  }

  static std::string escape_token(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~')
        out += "~0";
      else if (c == '/')
        out += "~1";
      else
        out += c;
    }
    return out;
  }

  void value(const std::string& path) {
    pos_[path] = i_;
    if (i_ >= s_.size()) return;
    const char c = s_[i_];
    if (c == '{') {
      ++i_;
      skip();
      while (i_ < s_.size() && s_[i_] != '}') {
        const std::string key = string();
        const std::string child = path + "/" + escape_token(key);
        skip();
        ++i_;  // ':'
        skip();
        value(child);
        skip();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
        skip();
      }
      ++i_;
    } else if (c == '[') {
      ++i_;
      skip();
      int index = 0;
      while (i_ < s_.size() && s_[i_] != ']') {
        value(path + "/" + std::to_string(index++));
        skip();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
        skip();
      }
      ++i_;
    } else if (c == '"') {
      string();
    } else {
      while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' && s_[i_] != ' ' && s_[i_] != '\n' &&
             s_[i_] != '\r' && s_[i_] != '\t')
        ++i_;
    }
  }

  const std::string& s_;
  std::size_t i_ = 0;
  std::map<std::string, std::size_t> pos_;
};

std::pair<int, int> line_col_of_offset(const std::string& text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// ---------------------------------------------------------------------------
// Typed access with located errors.

class Reader {
 public:
  explicit Reader(const PositionIndex& index) : index_(index) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    const auto [line, col] = index_.find(pointer);
    throw ConfigError((pointer.empty() ? "" : pointer + ": ") + message, line, col, pointer);
  }

  const json* get(const json& obj, const char* key) const {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  void require_object(const json& v, const std::string& pointer) const {
    if (!v.is_object()) fail(pointer, "expected an object");
  }

  void allow_keys(const json& obj, const std::string& pointer, std::initializer_list<const char*> keys) const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known) fail(pointer + "/" + it.key(), "unknown key '" + it.key() + "'");
    }
  }

  double number(const json& v, const std::string& pointer) const {
    if (!v.is_number()) fail(pointer, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(pointer, "expected a finite number");
    return d;
  }

  double positive(const json& v, const std::string& pointer) const {
    const double d = number(v, pointer);
    if (!(d > 0)) fail(pointer, "must be positive");
    return d;
  }

  long long integer(const json& v, const std::string& pointer, long long lo, long long hi) const {
    if (!v.is_number_integer()) fail(pointer, "expected an integer");
    const long long i = v.is_number_unsigned() ? static_cast<long long>(std::min<unsigned long long>(
                                                     v.get<unsigned long long>(), 1ULL << 62))
                                               : v.get<long long>();
    if (i < lo || i > hi) fail(pointer, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return i;
  }

  bool boolean(const json& v, const std::string& pointer) const {
    if (!v.is_boolean()) fail(pointer, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const json& v, const std::string& pointer) const {
    if (!v.is_string()) fail(pointer, "expected a string");
    return v.get<std::string>();
  }

  Expression expression(const json& v, const std::string& pointer) const {
    if (v.is_number()) return Expression::constant(number(v, pointer));
    if (!v.is_string()) fail(pointer, "expected a number or an expression string");
    try {
      return Expression::parse(v.get<std::string>());
    } catch (const ExpressionError& e) {
      fail(pointer, e.what());
    }
  }

 private:
  const PositionIndex& index_;
};

MeshModel parse_model(const Reader& r, const json& v, const std::string& p) {
  const std::string name = r.string(v, p);
  try {
    const MeshModel m = mesh_model_from_string(name);
    if (m == MeshModel::custom) r.fail(p, "use \"file\" for custom meshes");
    return m;
  } catch (const InvalidArgument&) {
    r.fail(p, "unknown mesh model '" + name + "'");
  }
}

int model_dimension(MeshModel m) { return (m == MeshModel::circle || m == MeshModel::interval) ? 1 : 2; }

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

void parse_mesh(const Reader& r, const json& v, ExperimentConfig& c, const std::string& base_dir, int& dim) {
  const std::string p = "/mesh";
  r.require_object(v, p);
  r.allow_keys(v, p, {"model", "n", "ny", "length", "width", "file"});
  if (const json* f = r.get(v, "file")) {
    if (v.size() != 1) r.fail(p, "\"file\" excludes the other mesh keys");
    fs::path path = r.string(*f, p + "/file");
    if (path.is_relative()) path = fs::path(base_dir) / path;
    c.mesh_file = path.lexically_normal().string();
    try {
      dim = read_mesh_file(*c.mesh_file).dimension;
    } catch (const std::exception& e) {
      r.fail(p + "/file", e.what());
    }
    return;
  }
  const json* model = r.get(v, "model");
  if (!model) r.fail(p, "missing \"model\" (or \"file\")");
  c.mesh.model = parse_model(r, *model, p + "/model");
  dim = model_dimension(c.mesh.model);
  const bool ico = c.mesh.model == MeshModel::icosphere;
  if (const json* n = r.get(v, "n"))
    c.mesh.n = static_cast<int>(r.integer(*n, p + "/n", ico ? 0 : 1, ico ? 7 : 1 << 20));
  else
    r.fail(p, "missing \"n\"");
  if (const json* ny = r.get(v, "ny")) {
    if (c.mesh.model != MeshModel::torus) r.fail(p + "/ny", "only the torus takes \"ny\"");
    c.mesh.ny = static_cast<int>(r.integer(*ny, p + "/ny", 1, 1 << 20));
  }
  if (const json* l = r.get(v, "length")) {
    if (ico) r.fail(p + "/length", "the icosphere is the unit sphere");
    c.mesh.length = r.positive(*l, p + "/length");
  }
  if (const json* w = r.get(v, "width")) {
    if (c.mesh.model != MeshModel::torus) r.fail(p + "/width", "only the torus takes \"width\"");
    c.mesh.width = r.positive(*w, p + "/width");
  }
  const int minimum = c.mesh.model == MeshModel::circle ? 3
                      : c.mesh.model == MeshModel::interval ? 2
                      : c.mesh.model == MeshModel::torus    ? 3
                      : c.mesh.model == MeshModel::disk     ? 3
                                                            : 0;
  if (c.mesh.n < minimum) r.fail(p + "/n", "must be at least " + std::to_string(minimum) + " for this model");
  if (c.mesh.model == MeshModel::torus && c.mesh.ny != 0 && c.mesh.ny < 3) r.fail(p + "/ny", "must be at least 3");
}

void parse_metric(const Reader& r, const json& v, ExperimentConfig& c, int dim) {
  const std::string p = "/metric";
  r.require_object(v, p);
  r.allow_keys(v, p, {"kind", "a", "b", "symmetrize"});
  const json* kind = r.get(v, "kind");
  if (!kind) r.fail(p, "missing \"kind\"");
  const std::string k = r.string(*kind, p + "/kind");
  MetricDescription& m = c.metric;
  if (k == "euclidean")
    m.kind = MetricKind::euclidean;
  else if (k == "riemannian")
    m.kind = MetricKind::riemannian;
  else if (k == "randers")
    m.kind = MetricKind::randers;
  else
    r.fail(p + "/kind", "unknown metric kind '" + k + "' (euclidean, riemannian, randers)");

  if (m.kind == MetricKind::euclidean) {
    for (const char* key : {"a", "b", "symmetrize"})
      if (r.get(v, key)) r.fail(p + "/" + key, "not used by the euclidean metric");
    return;
  }
  if (c.mesh.model == MeshModel::icosphere && !c.mesh_file)
    r.fail(p + "/kind", "icosphere elements carry local frames; only the euclidean metric is supported");

  const json* a = r.get(v, "a");
  if (!a) {
    for (int i = 0; i < dim * dim; ++i) m.a.push_back(Expression::constant(i % (dim + 1) == 0 ? 1.0 : 0.0));
  } else if (a->is_number() || a->is_string()) {
    const Expression s = r.expression(*a, p + "/a");
    for (int i = 0; i < dim * dim; ++i) m.a.push_back(i % (dim + 1) == 0 ? s : Expression::constant(0.0));
  } else if (a->is_array()) {
    if (static_cast<int>(a->size()) != dim) r.fail(p + "/a", "expected " + std::to_string(dim) + " rows");
    for (int i = 0; i < dim; ++i) {
      const std::string row_p = p + "/a/" + std::to_string(i);
      const json& row = (*a)[i];
      if (!row.is_array() || static_cast<int>(row.size()) != dim)
        r.fail(row_p, "expected a row of " + std::to_string(dim) + " entries");
      for (int j = 0; j < dim; ++j) m.a.push_back(r.expression(row[j], row_p + "/" + std::to_string(j)));
    }
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < i; ++j)
        if (m.a[i * dim + j].text() != m.a[j * dim + i].text())
          r.fail(p + "/a/" + std::to_string(i) + "/" + std::to_string(j), "a must be symmetric");
  } else {
    r.fail(p + "/a", "expected a number, an expression or a matrix");
  }

  if (m.kind == MetricKind::riemannian) {
    for (const char* key : {"b", "symmetrize"})
      if (r.get(v, key)) r.fail(p + "/" + key, "not used by the riemannian metric");
    return;
  }
  const json* b = r.get(v, "b");
  if (!b) r.fail(p, "randers metric needs \"b\"");
  if (!b->is_array() || static_cast<int>(b->size()) != dim)
    r.fail(p + "/b", "expected " + std::to_string(dim) + " entries");
  for (int i = 0; i < dim; ++i) m.b.push_back(r.expression((*b)[i], p + "/b/" + std::to_string(i)));
  if (const json* s = r.get(v, "symmetrize")) m.symmetrize = r.boolean(*s, p + "/symmetrize");
}

void parse_measure(const Reader& r, const json& v, ExperimentConfig& c) {
  const std::string p = "/measure";
  r.require_object(v, p);
  r.allow_keys(v, p, {"kind", "weight", "density"});
  const json* kind = r.get(v, "kind");
  if (!kind) r.fail(p, "missing \"kind\"");
  const std::string k = r.string(*kind, p + "/kind");
  try {
    c.measure.kind = measure_kind_from_string(k);
  } catch (const InvalidArgument&) {
    r.fail(p + "/kind", "unknown measure kind '" + k + "'");
  }
  const json* w = r.get(v, "weight");
  const json* d = r.get(v, "density");
  if (c.measure.kind == MeasureKind::weighted_riemannian) {
    if (!w) r.fail(p, "weighted measure needs \"weight\"");
    if (c.metric.kind == MetricKind::randers) r.fail(p + "/kind", "weighted measure needs a riemannian or euclidean metric");
  } else if (w) {
    r.fail(p + "/weight", "only the weighted_riemannian measure takes a weight");
  }
  if (c.measure.kind == MeasureKind::custom) {
    if (!d) r.fail(p, "custom measure needs \"density\"");
  } else if (d) {
    r.fail(p + "/density", "only the custom measure takes a density");
  }
  if (w) c.measure.weight = r.expression(*w, p + "/weight");
  if (d) c.measure.density = r.expression(*d, p + "/density");
}

void parse_solver(const Reader& r, const json& v, ExperimentConfig& c) {
  const std::string p = "/solver";
  r.require_object(v, p);
  r.allow_keys(v, p,
               {"mode", "k_max", "descent_tolerance", "max_iterations", "restarts", "deflation_count",
                "multiplicity_gap", "acceptance_residual", "minimax_rounds", "seed"});
  SolverConfig& s = c.solver;
  if (const json* m = r.get(v, "mode")) {
    const std::string mode = r.string(*m, p + "/mode");
    if (mode == "auto")
      c.mode = SolverMode::automatic;
    else if (mode == "linear")
      c.mode = SolverMode::linear;
    else if (mode == "nonlinear")
      c.mode = SolverMode::nonlinear;
    else
      r.fail(p + "/mode", "unknown mode '" + mode + "' (auto, linear, nonlinear)");
  }
  if (const json* k = r.get(v, "k_max")) c.k_max = static_cast<int>(r.integer(*k, p + "/k_max", 1, 100000));
  if (const json* t = r.get(v, "descent_tolerance")) s.descent_tolerance = r.positive(*t, p + "/descent_tolerance");
  if (const json* t = r.get(v, "max_iterations"))
    s.max_iterations = static_cast<int>(r.integer(*t, p + "/max_iterations", 1, 100000000));
  if (const json* t = r.get(v, "restarts")) s.restarts = static_cast<int>(r.integer(*t, p + "/restarts", 1, 1000));
  if (const json* t = r.get(v, "deflation_count"))
    s.deflation_count = static_cast<int>(r.integer(*t, p + "/deflation_count", 0, 100000));
  if (const json* t = r.get(v, "multiplicity_gap")) s.multiplicity_gap = r.positive(*t, p + "/multiplicity_gap");
  if (const json* t = r.get(v, "acceptance_residual"))
    s.acceptance_residual = r.positive(*t, p + "/acceptance_residual");
  if (const json* t = r.get(v, "minimax_rounds"))
    s.minimax_rounds = static_cast<int>(r.integer(*t, p + "/minimax_rounds", 0, 1000));
  if (const json* t = r.get(v, "seed")) {
    if (!t->is_number_unsigned() && !(t->is_number_integer() && t->get<long long>() >= 0))
      r.fail(p + "/seed", "expected a non-negative integer");
    s.seed = t->get<unsigned long long>();
  }
  if (c.mode == SolverMode::linear && c.metric.kind == MetricKind::randers)
    r.fail(p + "/mode", "the linear solver needs a riemannian or euclidean metric");
}

void parse_bounds(const Reader& r, const json& v, ExperimentConfig& c) {
  const std::string p = "/bounds";
  r.require_object(v, p);
  r.allow_keys(v, p,
               {"enabled", "N", "K", "d", "Theta", "Lambda", "slack", "k_max", "cheeger_radius", "continuum_factor"});
  BoundsSection& b = c.bounds;
  b.enabled = true;
  if (const json* e = r.get(v, "enabled")) b.enabled = r.boolean(*e, p + "/enabled");
  const json* N = r.get(v, "N");
  if (!N) r.fail(p, "missing \"N\"");
  b.N = r.number(*N, p + "/N");
  if (b.N != std::floor(b.N) || b.N < 1) r.fail(p + "/N", "the ball bound needs an integer N >= 1");
  if (const json* K = r.get(v, "K")) b.K = r.number(*K, p + "/K");
  auto measured_or_number = [&](const char* key, std::optional<double>& out, double lo) {
    const json* x = r.get(v, key);
    if (!x) return;
    const std::string xp = p + "/" + key;
    if (x->is_string()) {
      if (x->get<std::string>() != "measure") r.fail(xp, "expected a number or \"measure\"");
      out.reset();
    } else {
      out = r.number(*x, xp);
      if (!(*out >= lo) || (lo == 0 && *out == 0)) r.fail(xp, lo == 0 ? "must be positive" : "must be >= 1");
    }
  };
  b.d.reset();
  measured_or_number("d", b.d, 0.0);
  b.Theta = 1.0;
  b.Lambda = 1.0;
  measured_or_number("Theta", b.Theta, 1.0);
  measured_or_number("Lambda", b.Lambda, 1.0);
  if (b.K > 0 && b.d && *b.d >= 2 * 3.14159265358979323846 / std::sqrt(b.K))
    r.fail(p + "/d", "d / 2 must stay below pi / sqrt(K)");
  if (const json* s = r.get(v, "slack")) {
    b.slack = r.number(*s, p + "/slack");
    if (b.slack < 0) r.fail(p + "/slack", "must be >= 0");
  }
  if (const json* k = r.get(v, "k_max")) b.k_max = static_cast<int>(r.integer(*k, p + "/k_max", 1, 10000));
  if (const json* x = r.get(v, "cheeger_radius")) b.cheeger_radius = r.positive(*x, p + "/cheeger_radius");
  if (const json* x = r.get(v, "continuum_factor")) b.continuum_factor = r.positive(*x, p + "/continuum_factor");
}

void parse_bakry_emery(const Reader& r, const json& v, ExperimentConfig& c) {
  const std::string p = "/bakry_emery";
  r.require_object(v, p);
  r.allow_keys(v, p, {"cross_validate", "k_max", "tolerance", "N_effective"});
  CrossValidationSection& x = c.cross_validation;
  x.enabled = true;
  if (const json* e = r.get(v, "cross_validate")) x.enabled = r.boolean(*e, p + "/cross_validate");
  if (const json* k = r.get(v, "k_max")) x.k_max = static_cast<int>(r.integer(*k, p + "/k_max", 1, 10000));
  if (const json* t = r.get(v, "tolerance")) x.tolerance = r.positive(*t, p + "/tolerance");
  if (const json* n = r.get(v, "N_effective")) x.N_effective = r.number(*n, p + "/N_effective");
  if (x.enabled && c.measure.kind != MeasureKind::weighted_riemannian)
    r.fail(p + "/cross_validate", "cross validation needs the weighted_riemannian measure");
}

void parse_output(const Reader& r, const json& v, ExperimentConfig& c, const std::string& base_dir) {
  const std::string p = "/output";
  r.require_object(v, p);
  r.allow_keys(v, p, {"dir", "prefix", "json", "svg", "eigenfields"});
  OutputSection& o = c.output;
  if (const json* d = r.get(v, "dir")) {
    fs::path path = r.string(*d, p + "/dir");
    if (path.empty()) r.fail(p + "/dir", "must not be empty");
    if (path.is_relative()) path = fs::path(base_dir) / path;
    o.dir = path.lexically_normal().string();
  } else {
    o.dir = fs::path(base_dir).lexically_normal().string();
  }
  if (const json* x = r.get(v, "prefix")) {
    o.prefix = r.string(*x, p + "/prefix");
    if (o.prefix.empty() || o.prefix.find_first_of("/\\") != std::string::npos)
      r.fail(p + "/prefix", "must be a non-empty file name prefix");
  }
  if (const json* x = r.get(v, "json")) o.json = r.boolean(*x, p + "/json");
  if (const json* x = r.get(v, "svg")) o.svg = r.boolean(*x, p + "/svg");
  if (const json* x = r.get(v, "eigenfields")) o.eigenfields = r.boolean(*x, p + "/eigenfields");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = line_col_of_offset(text, offset);
    std::string what = e.what();
    const auto at = what.find("parse error");
    const auto colon = at == std::string::npos ? at : what.find(": ", at);
    if (colon != std::string::npos) what = what.substr(colon + 2);
    throw ConfigError(what, line, col);
  }
  const PositionIndex index(text);
  const Reader r(index);
  if (!root.is_object()) r.fail("", "the document must be an object");
  r.allow_keys(root, "",
               {"schema", "name", "mesh", "metric", "measure", "solver", "bounds", "bakry_emery", "packing",
                "convergence", "output"});

  ExperimentConfig c;
  const json* schema = r.get(root, "schema");
  if (!schema) r.fail("", "missing \"schema\"");
  if (r.string(*schema, "/schema") != kConfigSchema)
    r.fail("/schema", std::string("unsupported schema (expected \"") + kConfigSchema + "\")");
  if (const json* n = r.get(root, "name")) c.name = r.string(*n, "/name");

  const json* mesh = r.get(root, "mesh");
  if (!mesh) r.fail("", "missing \"mesh\"");
  int dim = 1;
  parse_mesh(r, *mesh, c, base_dir, dim);

  const json* metric = r.get(root, "metric");
  if (!metric) r.fail("", "missing \"metric\"");
  parse_metric(r, *metric, c, dim);

  if (const json* m = r.get(root, "measure")) parse_measure(r, *m, c);
  if (const json* s = r.get(root, "solver")) parse_solver(r, *s, c);
  if (const json* b = r.get(root, "bounds")) {
    parse_bounds(r, *b, c);
    if (c.bounds.enabled && c.mesh.model != MeshModel::circle && c.mesh.model != MeshModel::torus &&
        c.mesh.model != MeshModel::icosphere && !c.mesh_file)
      r.fail("/bounds/enabled", "bound checks need a closed mesh");
  }
  if (const json* x = r.get(root, "bakry_emery")) parse_bakry_emery(r, *x, c);
  if (const json* x = r.get(root, "packing")) {
    r.require_object(*x, "/packing");
    r.allow_keys(*x, "/packing", {"radius"});
    if (const json* rad = r.get(*x, "radius")) c.packing_radius = r.positive(*rad, "/packing/radius");
  }
  if (const json* x = r.get(root, "convergence")) {
    const std::string p = "/convergence";
    r.require_object(*x, p);
    r.allow_keys(*x, p, {"levels", "expected_order", "tolerance"});
    if (const json* l = r.get(*x, "levels")) c.convergence.levels = static_cast<int>(r.integer(*l, p + "/levels", 2, 12));
    if (const json* o = r.get(*x, "expected_order")) c.convergence.expected_order = r.positive(*o, p + "/expected_order");
    if (const json* t = r.get(*x, "tolerance")) c.convergence.order_tolerance = r.positive(*t, p + "/tolerance");
  }
  if (const json* o = r.get(root, "output"))
    parse_output(r, *o, c, base_dir);
  else
    c.output.dir = fs::path(base_dir).lexically_normal().string();

  try {
    c.solver.validate();
  } catch (const InvalidArgument& e) {
    r.fail("/solver", e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'", 0, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  fs::path base = fs::path(path).parent_path();
  if (base.empty()) base = ".";
  return parse_config(ss.str(), base.string());
}

int mesh_dimension(const ExperimentConfig& config) {
  if (config.mesh_file) return read_mesh_file(*config.mesh_file).dimension;
  return model_dimension(config.mesh.model);
}

Mesh build_mesh(const ExperimentConfig& config) {
  if (config.mesh_file) return read_mesh_file(*config.mesh_file);
  return build_mesh(config.mesh);
}

MetricSpec build_metric(const ExperimentConfig& config) {
  const int dim = mesh_dimension(config);
  const MetricDescription& d = config.metric;
  if (d.kind == MetricKind::euclidean) return MetricSpec::euclidean(dim);
  bool constant = true;
  for (const auto& e : d.a) constant = constant && e.is_constant();
  for (const auto& e : d.b) constant = constant && e.is_constant();
  std::string id = d.kind == MetricKind::riemannian ? "riemannian(a=[" : "randers(a=[";
  for (std::size_t i = 0; i < d.a.size(); ++i) id += (i ? ";" : "") + d.a[i].text();
  id += "]";
  if (d.kind == MetricKind::randers) {
    id += ",b=[";
    for (std::size_t i = 0; i < d.b.size(); ++i) id += (i ? ";" : "") + d.b[i].text();
    id += "]";
    if (d.symmetrize) id += ",symmetrized";
  }
  id += ")";
  MetricSpec spec;
  spec.dimension = dim;
  spec.id = id;
  spec.spatially_constant = constant;
  spec.field = [d, dim](const Location& x) {
    Mat a(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) a(i, j) = d.a[i * dim + j](x);
    if (d.kind == MetricKind::riemannian) return MinkowskiNorm::riemannian(a);
    Vec b(dim);
    for (int i = 0; i < dim; ++i) b(i) = d.b[i](x);
    return MinkowskiNorm::randers(a, b, d.symmetrize);
  };
  return spec;
}

MeasureDensity build_measure(const ExperimentConfig& config, const MetricSpec& metric) {
  const MeasureDescription& m = config.measure;
  switch (m.kind) {
    case MeasureKind::weighted_riemannian: {
      WeightedSpec w;
      w.riemannian = metric;
      const Expression f = *m.weight;
      w.weight_f = [f](const Location& x) { return f(x); };
      w.weight_id = f.text();
      return weighted_measure(w);
    }
    case MeasureKind::custom: {
      const Expression s = *m.density;
      return custom_measure([s](const Location& x) { return s(x); }, s.text());
    }
    default:
      return canonical_measure(metric, m.kind);
  }
}

bool uses_linear_solver(const ExperimentConfig& config) {
  if (config.mode == SolverMode::linear) return true;
  if (config.mode == SolverMode::nonlinear) return false;
  return config.metric.kind != MetricKind::randers;
}

void apply_overrides(ExperimentConfig& config, const Overrides& o) {
  if (o.seed) config.solver.seed = *o.seed;
  if (o.out_dir) {
    if (o.out_dir->empty()) throw InvalidArgument("--out-dir must not be empty");
    config.output.dir = fs::path(*o.out_dir).lexically_normal().string();
  }
  if (o.slack) {
    if (!(*o.slack >= 0)) throw InvalidArgument("--slack must be >= 0");
    config.bounds.slack = *o.slack;
  }
  if (o.levels) {
    if (*o.levels < 2) throw InvalidArgument("--levels must be >= 2");
    config.convergence.levels = *o.levels;
  }
  if (o.radius) {
    if (!(*o.radius > 0)) throw InvalidArgument("--radius must be positive");
    config.packing_radius = *o.radius;
  }
}

// ---------------------------------------------------------------------------
// Runners.

namespace {

struct Built {
  std::shared_ptr<const Mesh> mesh;
  MetricSpec metric;
  MeasureDensity measure;
  std::unique_ptr<FemProblem> problem;
};

Built build_all(const ExperimentConfig& config) {
  Built b;
  b.mesh = std::make_shared<const Mesh>(build_mesh(config));
  b.metric = build_metric(config);
  b.measure = build_measure(config, b.metric);
  b.problem = std::make_unique<FemProblem>(b.mesh, b.metric, b.measure);
  return b;
}

class ArtifactWriter {
 public:
  ArtifactWriter(const ExperimentConfig& config, RunOutcome& outcome) : config_(config), outcome_(outcome) {}

  template <class Fn>
  void write(const std::string& suffix, Fn&& fn) {
    if (!created_) {
      fs::create_directories(config_.output.dir);
      created_ = true;
    }
    const std::string path = (fs::path(config_.output.dir) / (config_.output.prefix + "_" + suffix)).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    fn(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
    outcome_.artifacts.push_back(path);
  }

  void text(const std::string& suffix, const std::string& content) {
    write(suffix, [&](std::ostream& o) { o << content; });
  }

 private:
  const ExperimentConfig& config_;
  RunOutcome& outcome_;
  bool created_ = false;
};

void fail_check(RunOutcome& outcome, const std::string& message) {
  outcome.status = kExitCheckFailed;
  outcome.messages.push_back(message);
}

struct SpectrumRun {
  SpectrumReport report;
  bool complete = true;
};

SpectrumRun solve_spectrum(const ExperimentConfig& config, const FemProblem& problem, int k_max, RunOutcome& outcome) {
  SpectrumRun run;
  k_max = std::min(k_max, problem.num_dofs());
  if (uses_linear_solver(config)) {
    run.report = solve_linear_spectrum(problem, k_max, config.solver.multiplicity_gap);
    return run;
  }
  try {
    run.report = solve_nonlinear_higher(problem, k_max, config.solver);
  } catch (const ConvergenceFailure& e) {
    run.complete = false;
    fail_check(outcome, std::string("solver did not converge: ") + e.what());
    return run;
  }
  if (static_cast<int>(run.report.entries.size()) < k_max) {
    run.complete = false;
    fail_check(outcome, "solver stopped after " + std::to_string(run.report.entries.size()) + " of " +
                            std::to_string(k_max) + " eigenvalues");
  }
  return run;
}

void write_spectrum(const ExperimentConfig& config, const SpectrumReport& report, ArtifactWriter& w) {
  w.write("spectrum.csv", [&](std::ostream& o) { write_spectrum_csv(o, report); });
  if (config.output.json) w.text("spectrum.json", spectrum_to_json(report, config.output.eigenfields) + "\n");
  if (config.output.svg) {
    const auto lambdas = report.lambdas();
    w.text("staircase.svg", render_svg(eigenvalue_staircase(lambdas, config.name + ": eigenvalue staircase")));
    w.text("counting.svg", render_svg(counting_function_plot(lambdas, config.name + ": counting function")));
  }
}

double measured_theta(const FemProblem& problem) {
  double worst = 0.0;
  const int dim = problem.dimension();
  for (const ElementData& el : problem.elements()) {
    const int dirs = dim == 1 ? 2 : 64;
    for (int i = 0; i < dirs; ++i) {
      Vec y(dim);
      if (dim == 1)
        y << (i == 0 ? 1.0 : -1.0);
      else
        y << std::cos(2 * 3.14159265358979323846 * i / dirs), std::sin(2 * 3.14159265358979323846 * i / dirs);
      worst = std::max(worst, std::abs(distortion(el.norm, y, el.sigma)));
    }
  }
  return std::exp(worst);
}

double measured_lambda(const FemProblem& problem) {
  double lambda = 1.0;
  for (const ElementData& el : problem.elements()) lambda = std::max(lambda, uniformity_constant(el.norm, 64));
  return lambda;
}

void check_and_write_bounds(const ExperimentConfig& config, const Built& b, const SpectrumReport& report,
                            ArtifactWriter& w, RunOutcome& outcome) {
  const BoundsSection& bs = config.bounds;
  if (!b.mesh->closed()) throw InvalidArgument("bound checks need a closed mesh");
  std::optional<DistanceOracle> oracle;
  auto get_oracle = [&]() -> const DistanceOracle& {
    if (!oracle) oracle.emplace(*b.mesh, b.metric);
    return *oracle;
  };
  CurvatureAssumption a;
  a.N = bs.N;
  a.K = bs.K;
  a.n = b.mesh->dimension;
  a.d = bs.d ? *bs.d : get_oracle().diameter();
  a.Theta = bs.Theta ? *bs.Theta : measured_theta(*b.problem);
  a.Lambda = bs.Lambda ? *bs.Lambda : measured_lambda(*b.problem);
  a.validate();
  std::optional<LowerIndication> lower;
  if (bs.cheeger_radius) {
    const PipelineResult pr =
        dirichlet_region_lower_pipeline(*b.problem, get_oracle(), *bs.cheeger_radius, a.Lambda, a.Theta);
    lower = LowerIndication{pr.num_regions(), pr.value, bs.continuum_factor};
  }
  const BoundReport br = check_bounds(report, a, bs.k_max, bs.slack, lower);
  w.write("bounds.csv", [&](std::ostream& o) { write_bound_csv(o, br); });
  if (static_cast<int>(br.records.size()) < bs.k_max)
    fail_check(outcome, "spectrum too short for " + std::to_string(bs.k_max) + " bound records");
  if (!br.all_satisfied()) fail_check(outcome, "bound check failed (" + br.provenance + ")");
}

int bound_spectrum_size(const ExperimentConfig& config, const Built& b) {
  int k = config.k_max;
  if (config.bounds.enabled) {
    int need = config.bounds.k_max + 1;
    if (config.bounds.cheeger_radius) {
      // The lower indication attaches to the positive index equal to the region count.
      const DistanceOracle oracle(*b.mesh, b.metric);
      need = std::max(need, complete_r_package(oracle, *config.bounds.cheeger_radius).num_regions() + 1);
    }
    k = std::max(k, need);
  }
  return k;
}

void cross_validate(const ExperimentConfig& config, const Built& b, ArtifactWriter& w, RunOutcome& outcome) {
  WeightedSpec ws;
  ws.riemannian = b.metric;
  const Expression f = *config.measure.weight;
  ws.weight_f = [f](const Location& x) { return f(x); };
  ws.weight_id = f.text();
  ws.N_effective = config.cross_validation.N_effective;
  const int k = std::min(config.cross_validation.k_max, b.problem->num_dofs());
  CrossValidation cv;
  try {
    cv = cross_validate_weighted(*b.mesh, ws, k, config.solver, config.cross_validation.tolerance);
  } catch (const ConvergenceFailure& e) {
    fail_check(outcome, std::string("cross validation did not converge: ") + e.what());
    return;
  }
  w.write("cross_validation.csv", [&](std::ostream& o) { write_cross_validation_csv(o, cv); });
  if (!cv.agree) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "cross validation disagreement %.3e > %.3e", cv.max_relative_difference, cv.tolerance);
    fail_check(outcome, buf);
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

void packing_checks(const Built& b, double r, ArtifactWriter& w, RunOutcome& outcome) {
  const DistanceOracle oracle(*b.mesh, b.metric);
  const Packing packing = complete_r_package(oracle, r);
  const int ca = packing.num_regions();
  const int co = covering_number(oracle, r);
  const int ca_half = packing_number(oracle, r / 2);
  const SandwichCheck sw = verify_region_sandwich(packing);
  const double edge = oracle.max_edge_length();
  const bool valid = verify_packing(packing);
  const bool chain = ca <= co && co <= ca_half;
  const bool sandwich = sw.holds(edge);
  w.write("packing.csv", [&](std::ostream& o) { write_packing_csv(o, packing); });
  w.write("packing_summary.csv", [&](std::ostream& o) {
    o << "radius,packing_number,covering_number,packing_number_half,chain_holds,inner_violation,outer_violation,"
         "edge_tolerance,sandwich_holds,valid_packing\n";
    o << fmt_double(r) << ',' << ca << ',' << co << ',' << ca_half << ',' << (chain ? 1 : 0) << ','
      << fmt_double(sw.inner_violation) << ',' << fmt_double(sw.outer_violation) << ',' << fmt_double(edge) << ','
      << (sandwich ? 1 : 0) << ',' << (valid ? 1 : 0) << '\n';
  });
  if (!valid) fail_check(outcome, "packing is not a complete r-package");
  if (!chain) fail_check(outcome, "packing chain Ca(r) <= Co(r) <= Ca(r/2) failed");
  if (!sandwich) fail_check(outcome, "region sandwich failed beyond one edge length");
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config) {
  RunOutcome outcome;
  Built b = build_all(config);
  const SpectrumRun sr = solve_spectrum(config, *b.problem, bound_spectrum_size(config, b), outcome);
  ArtifactWriter w(config, outcome);
  write_spectrum(config, sr.report, w);
  if (!sr.complete) return outcome;
  if (config.cross_validation.enabled) cross_validate(config, b, w, outcome);
  if (config.bounds.enabled) check_and_write_bounds(config, b, sr.report, w, outcome);
  if (config.packing_radius) packing_checks(b, *config.packing_radius, w, outcome);
  return outcome;
}

RunOutcome run_bounds(const ExperimentConfig& input) {
  ExperimentConfig config = input;
  if (!config.bounds.enabled) throw InvalidArgument("the config has no enabled \"bounds\" section");
  RunOutcome outcome;
  Built b = build_all(config);
  if (!b.mesh->closed()) throw InvalidArgument("bound checks need a closed mesh");
  const SpectrumRun sr = solve_spectrum(config, *b.problem, bound_spectrum_size(config, b), outcome);
  ArtifactWriter w(config, outcome);
  write_spectrum(config, sr.report, w);
  if (!sr.complete) return outcome;
  check_and_write_bounds(config, b, sr.report, w, outcome);
  return outcome;
}

RunOutcome run_packing(const ExperimentConfig& config) {
  if (!config.packing_radius) throw InvalidArgument("no packing radius (use --radius or packing.radius)");
  RunOutcome outcome;
  Built b = build_all(config);
  ArtifactWriter w(config, outcome);
  packing_checks(b, *config.packing_radius, w, outcome);
  return outcome;
}

MeshParams refined_mesh(const MeshParams& base, int level) {
  if (level < 0) throw InvalidArgument("refinement level must be >= 0");
  MeshParams p = base;
  if (base.model == MeshModel::icosphere) {
    p.n = base.n + level;
    return p;
  }
  if (base.model == MeshModel::custom) throw InvalidArgument("file meshes cannot be refined");
  p.n = base.n << level;
  if (base.ny > 0) p.ny = base.ny << level;
  return p;
}

double estimated_order(double coarse, double middle, double fine) {
  const double d1 = std::abs(coarse - middle), d2 = std::abs(middle - fine);
  const double scale = std::max({std::abs(coarse), std::abs(middle), std::abs(fine), 1.0});
  if (!(d1 > 1e-10 * scale) || !(d2 > 1e-10 * scale)) return std::numeric_limits<double>::quiet_NaN();
  return std::log2(d1 / d2);
}

ConvergenceTable convergence_study(const ExperimentConfig& input, int levels) {
  if (levels < 2) throw InvalidArgument("convergence study needs at least 2 levels");
  if (input.mesh_file) throw InvalidArgument("file meshes cannot be refined");
  ConvergenceTable table;
  ExperimentConfig config = input;
  int k_min = std::numeric_limits<int>::max();
  for (int level = 0; level < levels; ++level) {
    config.mesh = refined_mesh(input.mesh, level);
    Built b = build_all(config);
    RunOutcome scratch;
    const SpectrumRun sr = solve_spectrum(config, *b.problem, config.k_max, scratch);
    if (!sr.complete) throw NumericFailure("convergence study: solver failed at level " + std::to_string(level));
    table.resolutions.push_back(config.mesh.n);
    table.lambdas.push_back(sr.report.lambdas());
    k_min = std::min<int>(k_min, static_cast<int>(table.lambdas.back().size()));
  }
  for (auto& l : table.lambdas) l.resize(k_min);
  table.order.assign(k_min, std::numeric_limits<double>::quiet_NaN());
  if (levels >= 3)
    for (int k = 0; k < k_min; ++k)
      table.order[k] = estimated_order(table.lambdas[levels - 3][k], table.lambdas[levels - 2][k], table.lambdas[levels - 1][k]);
  return table;
}

RunOutcome run_convergence(const ExperimentConfig& config) {
  RunOutcome outcome;
  const int levels = config.convergence.levels;
  const ConvergenceTable table = convergence_study(config, levels);
  ArtifactWriter w(config, outcome);
  auto num = [](double v) { return std::isfinite(v) ? fmt_double(v) : std::string("nan"); };
  const int kk = table.order.empty() ? 0 : static_cast<int>(table.order.size());
  w.write("convergence.csv", [&](std::ostream& o) {
    o << "level,resolution,k,lambda\n";
    for (int l = 0; l < levels; ++l)
      for (int k = 0; k < kk; ++k)
        o << l << ',' << table.resolutions[l] << ',' << k + 1 << ',' << num(table.lambdas[l][k]) << '\n';
  });
  w.write("convergence_order.csv", [&](std::ostream& o) {
    o << "k,lambda_finest,order\n";
    for (int k = 0; k < kk; ++k) o << k + 1 << ',' << num(table.lambdas[levels - 1][k]) << ',' << num(table.order[k]) << '\n';
  });
  if (config.output.svg) {
    Plot p;
    p.title = config.name + ": eigenvalue error against resolution";
    p.x_label = "resolution";
    p.y_label = "|lambda_k(level) - lambda_k(finest)|";
    p.log_x = true;
    p.log_y = true;
    for (int k = 0; k < kk; ++k) {
      PlotSeries s;
      s.label = "k = " + std::to_string(k + 1);
      for (int l = 0; l + 1 < levels; ++l)
        s.points.emplace_back(table.resolutions[l], std::abs(table.lambdas[l][k] - table.lambdas[levels - 1][k]));
      bool any = false;
      for (const auto& pt : s.points) any = any || pt.second > 1e-13;
      if (any) p.series.push_back(std::move(s));
    }
    w.text("convergence.svg", render_svg(p));
  }
  if (config.convergence.expected_order) {
    const double want = *config.convergence.expected_order, tol = config.convergence.order_tolerance;
    for (int k = 0; k < kk; ++k)
      if (std::isfinite(table.order[k]) && std::abs(table.order[k] - want) > tol)
        fail_check(outcome, "order of lambda_" + std::to_string(k + 1) + " is " + fmt_double(table.order[k]) +
                                ", expected " + fmt_double(want) + " +- " + fmt_double(tol));
  }
  return outcome;
}

}  // namespace finsler
