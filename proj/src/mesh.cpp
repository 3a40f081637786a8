// SPDX-License-Identifier: Apache-2.0
#include "finsler/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace finsler {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double v, double period) {
  double w = std::fmod(v, period);
  if (w < 0) w += period;
  return w;
}

double chart_det(const Mesh& mesh, int e) {
  const auto& c = mesh.charts[e].local;
  if (mesh.dimension == 1) return c[1].x() - c[0].x();
  const Eigen::Vector2d u = c[1] - c[0], v = c[2] - c[0];
  return u.x() * v.y() - u.y() * v.x();
}

// Flip 2-simplices whose chart orientation is negative.
void orient_positive(Mesh& mesh) {
  if (mesh.dimension != 2) return;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    if (chart_det(mesh, static_cast<int>(e)) < 0) {
      std::swap(mesh.elements[e][1], mesh.elements[e][2]);
      std::swap(mesh.charts[e].local[1], mesh.charts[e].local[2]);
    }
  }
}

struct UnionFind {
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void join(int a, int b) { parent[find(a)] = find(b); }
  std::vector<int> parent;
};

}  // namespace

const char* to_string(MeshModel model) {
  switch (model) {
    case MeshModel::circle: return "circle";
    case MeshModel::interval: return "interval";
    case MeshModel::torus: return "torus";
    case MeshModel::disk: return "disk";
    case MeshModel::icosphere: return "icosphere";
    case MeshModel::custom: return "custom";
  }
  return "custom";
}

MeshModel mesh_model_from_string(const std::string& name) {
  if (name == "circle") return MeshModel::circle;
  if (name == "interval") return MeshModel::interval;
  if (name == "torus") return MeshModel::torus;
  if (name == "disk") return MeshModel::disk;
  if (name == "icosphere") return MeshModel::icosphere;
  if (name == "custom") return MeshModel::custom;
  throw InvalidArgument("unknown mesh model '" + name + "'");
}

double Mesh::element_volume(int e) const {
  const double det = std::abs(chart_det(*this, e));
  return dimension == 1 ? det : 0.5 * det;
}

void Mesh::finalize() {
  if (dimension != 1 && dimension != 2) throw InvalidArgument("mesh: dimension must be 1 or 2");
  const int nv = static_cast<int>(vertices.size());
  if (nv == 0 || elements.empty()) throw InvalidArgument("mesh: no vertices or elements");
  const int per = vertices_per_element();

  if (charts.empty()) {
    charts.resize(elements.size());
    for (std::size_t e = 0; e < elements.size(); ++e) {
      Eigen::Vector3d c = Eigen::Vector3d::Zero();
      for (int i = 0; i < per; ++i) {
        const auto& p = vertices.at(elements[e][i]);
        charts[e].local[i] = p.head<2>();
        c += p;
      }
      c /= per;
      charts[e].anchor = Location{c.x(), c.y(), c.z(), std::atan2(c.y(), c.x())};
    }
  }
  if (charts.size() != elements.size()) throw InvalidArgument("mesh: one chart per element required");

  for (std::size_t e = 0; e < elements.size(); ++e) {
    for (int i = 0; i < per; ++i)
      if (elements[e][i] < 0 || elements[e][i] >= nv) throw InvalidArgument("mesh: vertex index out of range");
    if (!(element_volume(static_cast<int>(e)) > 0.0))
      throw InvalidArgument("mesh: element " + std::to_string(e) + " has non-positive chart volume");
  }

  std::vector<char> is_boundary(nv, 0);
  for (int b : boundary_vertices) {
    if (b < 0 || b >= nv) throw InvalidArgument("mesh: boundary index out of range");
    is_boundary[b] = 1;
  }
  std::vector<char> is_source(nv, 0);
  for (auto [src, rep] : identifications) {
    if (src < 0 || src >= nv || rep < 0 || rep >= nv || src == rep)
      throw InvalidArgument("mesh: bad identification pair");
    if (is_boundary[src] || is_boundary[rep])
      throw InvalidArgument("mesh: identified vertices must not be boundary vertices");
    if (is_source[src]) throw InvalidArgument("mesh: vertex identified twice");
    is_source[src] = 1;
  }
  for (auto [src, rep] : identifications)
    if (is_source[rep]) throw InvalidArgument("mesh: identification target is itself identified");

  node_of_vertex.assign(nv, -1);
  num_nodes = 0;
  for (int v = 0; v < nv; ++v)
    if (!is_source[v]) node_of_vertex[v] = num_nodes++;
  for (auto [src, rep] : identifications) node_of_vertex[src] = node_of_vertex[rep];

  dof_of_node.assign(num_nodes, 0);
  for (int v = 0; v < nv; ++v)
    if (is_boundary[v]) dof_of_node[node_of_vertex[v]] = -1;
  num_dofs = 0;
  for (int& d : dof_of_node)
    if (d == 0) d = num_dofs++;

  UnionFind uf(num_nodes);
  std::vector<char> used(num_nodes, 0);
  for (const auto& el : elements) {
    for (int i = 0; i < per; ++i) used[node_of_vertex[el[i]]] = 1;
    for (int i = 1; i < per; ++i) uf.join(node_of_vertex[el[0]], node_of_vertex[el[i]]);
  }
  for (int n = 0; n < num_nodes; ++n) {
    if (!used[n]) throw InvalidArgument("mesh: vertex not used by any element");
    if (uf.find(n) != uf.find(0)) throw InvalidArgument("mesh: element graph is not connected");
  }
  if (num_dofs == 0) throw InvalidArgument("mesh: no free degrees of freedom");
}

Mesh make_circle(int n, double circumference) {
  if (n < 3) throw InvalidArgument("circle: need at least 3 vertices");
  if (!(circumference > 0)) throw InvalidArgument("circle: circumference must be positive");
  Mesh m;
  m.dimension = 1;
  m.model = MeshModel::circle;
  m.id = "circle(" + std::to_string(n) + ")";
  const double h = circumference / n;
  for (int i = 0; i < n; ++i) m.vertices.emplace_back(i * h, 0.0, 0.0);
  for (int i = 0; i < n; ++i) {
    m.elements.push_back({i, (i + 1) % n, 0});
    ElementChart c;
    c.local[0] = {i * h, 0.0};
    c.local[1] = {(i + 1) * h, 0.0};
    const double theta = 2.0 * kPi * wrap((i + 0.5) * h, circumference) / circumference;
    c.anchor = Location{std::cos(theta), std::sin(theta), 0.0, theta};
    m.charts.push_back(c);
  }
  m.finalize();
  return m;
}

Mesh make_interval(int n, double length) {
  if (n < 3) throw InvalidArgument("interval: need at least 3 segments");
  if (!(length > 0)) throw InvalidArgument("interval: length must be positive");
  Mesh m;
  m.dimension = 1;
  m.model = MeshModel::interval;
  m.id = "interval(" + std::to_string(n) + ")";
  const double h = length / n;
  for (int i = 0; i <= n; ++i) m.vertices.emplace_back(i * h, 0.0, 0.0);
  for (int i = 0; i < n; ++i) {
    m.elements.push_back({i, i + 1, 0});
    ElementChart c;
    c.local[0] = {i * h, 0.0};
    c.local[1] = {(i + 1) * h, 0.0};
    c.anchor = Location{(i + 0.5) * h, 0.0, 0.0, 0.0};
    m.charts.push_back(c);
  }
  m.boundary_vertices = {0, n};
  m.finalize();
  return m;
}

Mesh make_torus(int nx, int ny, double lx, double ly) {
  if (nx < 3 || ny < 3) throw InvalidArgument("torus: need at least 3 cells per direction");
  if (!(lx > 0) || !(ly > 0)) throw InvalidArgument("torus: side lengths must be positive");
  Mesh m;
  m.dimension = 2;
  m.model = MeshModel::torus;
  m.id = "torus(" + std::to_string(nx) + "x" + std::to_string(ny) + ")";
  const double hx = lx / nx, hy = ly / ny;
  auto vid = [&](int i, int j) { return (j % ny) * nx + (i % nx); };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) m.vertices.emplace_back(i * hx, j * hy, 0.0);
  auto add = [&](std::array<std::pair<int, int>, 3> ij) {
    std::array<int, 3> el{};
    ElementChart c;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (int k = 0; k < 3; ++k) {
      el[k] = vid(ij[k].first, ij[k].second);
      c.local[k] = {ij[k].first * hx, ij[k].second * hy};
      centroid += c.local[k] / 3.0;
    }
    const double x = wrap(centroid.x(), lx), y = wrap(centroid.y(), ly);
    c.anchor = Location{x, y, 0.0, std::atan2(y, x)};
    m.elements.push_back(el);
    m.charts.push_back(c);
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      add({{{i, j}, {i + 1, j}, {i + 1, j + 1}}});
      add({{{i, j}, {i + 1, j + 1}, {i, j + 1}}});
    }
  m.finalize();
  return m;
}

Mesh make_disk(int rings, double radius) {
  if (rings < 3) throw InvalidArgument("disk: need at least 3 rings");
  if (!(radius > 0)) throw InvalidArgument("disk: radius must be positive");
  Mesh m;
  m.dimension = 2;
  m.model = MeshModel::disk;
  m.id = "disk(" + std::to_string(rings) + ")";
  std::vector<std::vector<int>> ring(rings + 1);
  m.vertices.emplace_back(0.0, 0.0, 0.0);
  ring[0] = {0};
  for (int i = 1; i <= rings; ++i) {
    const int count = 6 * i;
    const double r = radius * i / rings;
    for (int j = 0; j < count; ++j) {
      const double t = 2.0 * kPi * j / count;
      ring[i].push_back(static_cast<int>(m.vertices.size()));
      m.vertices.emplace_back(r * std::cos(t), r * std::sin(t), 0.0);
    }
  }
  auto add = [&](int a, int b, int c) { m.elements.push_back({a, b, c}); };
  for (int i = 1; i <= rings; ++i) {
    const auto& outer = ring[i];
    const int no = static_cast<int>(outer.size());
    if (i == 1) {
      for (int j = 0; j < no; ++j) add(0, outer[j], outer[(j + 1) % no]);
      continue;
    }
    const auto& inner = ring[i - 1];
    const int ni = static_cast<int>(inner.size());
    int a = 0, b = 0;
    while (a < ni || b < no) {
      const double next_outer = static_cast<double>(b + 1) / no;
      const double next_inner = static_cast<double>(a + 1) / ni;
      if (b < no && (a >= ni || next_outer <= next_inner)) {
        add(inner[a % ni], outer[b % no], outer[(b + 1) % no]);
        ++b;
      } else {
        add(inner[a % ni], outer[b % no], inner[(a + 1) % ni]);
        ++a;
      }
    }
  }
  m.charts.resize(m.elements.size());
  for (std::size_t e = 0; e < m.elements.size(); ++e) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k) {
      const auto& p = m.vertices[m.elements[e][k]];
      m.charts[e].local[k] = p.head<2>();
      c += p / 3.0;
    }
    m.charts[e].anchor = Location{c.x(), c.y(), 0.0, std::atan2(c.y(), c.x())};
  }
  orient_positive(m);
  m.boundary_vertices = ring[rings];
  m.finalize();
  return m;
}

Mesh make_icosphere(int level) {
  if (level < 0 || level > 7) throw InvalidArgument("icosphere: level must be in [0, 7]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                                    {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                                    {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7}, {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(v.size());
      v.push_back((v[a] + v[b]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int ab = mid(tri[0], tri[1]), bc = mid(tri[1], tri[2]), ca = mid(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f.swap(next);
  }
  Mesh m;
  m.dimension = 2;
  m.model = MeshModel::icosphere;
  m.id = "icosphere(" + std::to_string(level) + ")";
  m.vertices = v;
  m.elements = f;
  m.charts.resize(f.size());
  for (std::size_t e = 0; e < f.size(); ++e) {
    const Eigen::Vector3d& p0 = v[f[e][0]];
    const Eigen::Vector3d& p1 = v[f[e][1]];
    const Eigen::Vector3d& p2 = v[f[e][2]];
    // Orthonormal frame of the flat triangle, oriented by the outward normal.
    const Eigen::Vector3d e1 = (p1 - p0).normalized();
    const Eigen::Vector3d nrm = (p1 - p0).cross(p2 - p0).normalized();
    const Eigen::Vector3d e2 = nrm.cross(e1);
    auto& c = m.charts[e];
    c.local[0] = {0.0, 0.0};
    c.local[1] = {(p1 - p0).dot(e1), (p1 - p0).dot(e2)};
    c.local[2] = {(p2 - p0).dot(e1), (p2 - p0).dot(e2)};
    const Eigen::Vector3d centroid = ((p0 + p1 + p2) / 3.0).normalized();
    c.anchor = Location{centroid.x(), centroid.y(), centroid.z(),
                        std::acos(std::clamp(centroid.z(), -1.0, 1.0))};
  }
  orient_positive(m);
  m.finalize();
  return m;
}

Mesh build_mesh(const MeshParams& p) {
  switch (p.model) {
    case MeshModel::circle:
      return p.length > 0 ? make_circle(p.n, p.length) : make_circle(p.n);
    case MeshModel::interval: return make_interval(p.n, p.length > 0 ? p.length : 1.0);
    case MeshModel::torus:
      return make_torus(p.n, p.ny > 0 ? p.ny : p.n, p.length > 0 ? p.length : 1.0,
                        p.width > 0 ? p.width : (p.length > 0 ? p.length : 1.0));
    case MeshModel::disk: return make_disk(p.n, p.length > 0 ? p.length : 1.0);
    case MeshModel::icosphere: return make_icosphere(p.n);
    case MeshModel::custom: break;
  }
  throw InvalidArgument("build_mesh: custom meshes must be read from a file");
}

namespace {

// Reads the next non-empty, non-comment line.
bool next_line(std::istream& in, std::istringstream& line, int& lineno) {
  std::string s;
  while (std::getline(in, s)) {
    ++lineno;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s.erase(hash);
    if (s.find_first_not_of(" \t\r") == std::string::npos) continue;
    line.clear();
    line.str(s);
    return true;
  }
  return false;
}

[[noreturn]] void fail(int lineno, const std::string& msg) {
  throw InvalidArgument("mesh file line " + std::to_string(lineno) + ": " + msg);
}

std::size_t expect_section(std::istream& in, std::istringstream& line, int& lineno,
                           const std::string& keyword) {
  if (!next_line(in, line, lineno)) fail(lineno, "missing '" + keyword + "' section");
  std::string word;
  long long count = -1;
  if (!(line >> word >> count) || word != keyword || count < 0)
    fail(lineno, "expected '" + keyword + " <count>'");
  return static_cast<std::size_t>(count);
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  Mesh m;
  std::istringstream line;
  int lineno = 0;
  std::string word;
  if (!next_line(in, line, lineno) || !(line >> word) || word != "finsler-mesh")
    fail(lineno, "expected header 'finsler-mesh 1'");
  int version = 0;
  if (!(line >> version) || version != 1) fail(lineno, "unsupported mesh format version");

  if (!next_line(in, line, lineno) || !(line >> word >> m.dimension) || word != "dimension")
    fail(lineno, "expected 'dimension <1|2>'");
  if (m.dimension != 1 && m.dimension != 2) fail(lineno, "dimension must be 1 or 2");

  // Optional model line.
  if (!next_line(in, line, lineno)) fail(lineno, "unexpected end of file");
  if (line >> word; word == "model") {
    std::string name;
    if (!(line >> name)) fail(lineno, "expected model name");
    try {
      m.model = mesh_model_from_string(name);
    } catch (const InvalidArgument& e) {
      fail(lineno, e.what());
    }
    if (!next_line(in, line, lineno)) fail(lineno, "unexpected end of file");
    line >> word;
  }
  long long nv = -1;
  if (word != "vertices" || !(line >> nv) || nv <= 0) fail(lineno, "expected 'vertices <count>'");
  m.vertices.resize(static_cast<std::size_t>(nv));
  for (auto& p : m.vertices) {
    if (!next_line(in, line, lineno)) fail(lineno, "truncated vertex list");
    p = Eigen::Vector3d::Zero();
    if (!(line >> p.x())) fail(lineno, "bad vertex coordinates");
    if (!(line >> p.y())) p.y() = 0.0;
    if (!(line >> p.z())) p.z() = 0.0;
  }

  const std::size_t ne = expect_section(in, line, lineno, "elements");
  const int per = m.dimension + 1;
  bool any_chart = false, all_chart = true;
  std::vector<ElementChart> charts(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    if (!next_line(in, line, lineno)) fail(lineno, "truncated element list");
    std::array<int, 3> el{0, 0, 0};
    for (int k = 0; k < per; ++k)
      if (!(line >> el[k])) fail(lineno, "bad element vertex list");
    m.elements.push_back(el);
    double first = 0.0;
    if (line >> first) {
      any_chart = true;
      auto& c = charts[e];
      std::vector<double> vals{first};
      double val = 0.0;
      while (line >> val) vals.push_back(val);
      const std::size_t need = static_cast<std::size_t>(per * m.dimension + 4);
      if (vals.size() != need) fail(lineno, "element chart needs " + std::to_string(need) + " numbers");
      std::size_t idx = 0;
      for (int k = 0; k < per; ++k)
        for (int d = 0; d < m.dimension; ++d) c.local[k](d) = vals[idx++];
      c.anchor = Location{vals[idx], vals[idx + 1], vals[idx + 2], vals[idx + 3]};
    } else {
      all_chart = false;
    }
  }
  if (any_chart && !all_chart) fail(lineno, "either every element carries a chart or none does");
  if (any_chart) m.charts = std::move(charts);

  const std::size_t nb = expect_section(in, line, lineno, "boundary");
  while (m.boundary_vertices.size() < nb) {
    if (!next_line(in, line, lineno)) fail(lineno, "truncated boundary list");
    int b = 0;
    while (line >> b) m.boundary_vertices.push_back(b);
  }
  if (m.boundary_vertices.size() != nb) fail(lineno, "boundary count mismatch");

  const std::size_t ni = expect_section(in, line, lineno, "identifications");
  for (std::size_t i = 0; i < ni; ++i) {
    if (!next_line(in, line, lineno)) fail(lineno, "truncated identification list");
    int a = 0, b = 0;
    if (!(line >> a >> b)) fail(lineno, "expected '<vertex> <representative>'");
    m.identifications.emplace_back(a, b);
  }
  m.id = std::string("file:") + to_string(m.model) + "(" + std::to_string(nv) + ")";
  m.finalize();
  return m;
}

void write_mesh(std::ostream& out, const Mesh& m) {
  out.precision(17);
  out << "finsler-mesh 1\n";
  out << "dimension " << m.dimension << "\n";
  out << "model " << to_string(m.model) << "\n";
  out << "vertices " << m.vertices.size() << "\n";
  for (const auto& p : m.vertices) out << p.x() << " " << p.y() << " " << p.z() << "\n";
  out << "elements " << m.elements.size() << "\n";
  const int per = m.vertices_per_element();
  for (std::size_t e = 0; e < m.elements.size(); ++e) {
    for (int k = 0; k < per; ++k) out << m.elements[e][k] << (k + 1 < per ? " " : "");
    if (!m.charts.empty()) {
      const auto& c = m.charts[e];
      for (int k = 0; k < per; ++k)
        for (int d = 0; d < m.dimension; ++d) out << " " << c.local[k](d);
      out << " " << c.anchor.x << " " << c.anchor.y << " " << c.anchor.z << " " << c.anchor.theta;
    }
    out << "\n";
  }
  out << "boundary " << m.boundary_vertices.size() << "\n";
  for (int b : m.boundary_vertices) out << b << "\n";
  out << "identifications " << m.identifications.size() << "\n";
  for (auto [a, b] : m.identifications) out << a << " " << b << "\n";
}

std::vector<std::pair<int, int>> node_edges(const Mesh& mesh) {
  std::set<std::pair<int, int>> edges;
  const int per = mesh.vertices_per_element();
  for (const auto& el : mesh.elements)
    for (int i = 0; i < per; ++i)
      for (int j = i + 1; j < per; ++j) {
        const int a = mesh.node_of_vertex[el[i]], b = mesh.node_of_vertex[el[j]];
        if (a != b) edges.insert(std::minmax(a, b));
      }
  return {edges.begin(), edges.end()};
}

}  // namespace finsler
