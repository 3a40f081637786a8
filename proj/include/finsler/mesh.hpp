// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "finsler/common.hpp"

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace finsler {

enum class MeshModel { circle, interval, torus, disk, icosphere, custom };

const char* to_string(MeshModel model);
MeshModel mesh_model_from_string(const std::string& name);

/// Affine chart of one simplex: the local coordinates of its vertices (first
/// `dimension` components used) and the location at which metric and density
/// are sampled.
struct ElementChart {
  std::array<Eigen::Vector2d, 3> local{};
  Location anchor;
};

/// Simplicial mesh of a compact model manifold. Periodicity is carried either
/// by element charts whose local coordinates unwrap across a seam or by
/// vertex identifications (vertex -> representative), which are merged into a
/// single node. Boundary vertices carry the homogeneous Dirichlet condition.
struct Mesh {
  int dimension = 1;
  MeshModel model = MeshModel::custom;
  std::string id = "mesh";
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> elements;
  std::vector<ElementChart> charts;
  std::vector<int> boundary_vertices;
  std::vector<std::pair<int, int>> identifications;

  // Filled by finalize().
  std::vector<int> node_of_vertex;
  std::vector<int> dof_of_node;  // -1 on boundary nodes
  int num_nodes = 0;
  int num_dofs = 0;

  int vertices_per_element() const { return dimension + 1; }
  bool closed() const { return boundary_vertices.empty(); }

  /// Validates the invariants and builds the node and degree-of-freedom maps.
  void finalize();

  /// Chart volume of element `e` (length or area).
  double element_volume(int e) const;
};

Mesh make_circle(int n, double circumference = 2.0 * 3.14159265358979323846);
Mesh make_interval(int n, double length = 1.0);
Mesh make_torus(int nx, int ny, double lx = 1.0, double ly = 1.0);
Mesh make_disk(int rings, double radius = 1.0);
Mesh make_icosphere(int level);

struct MeshParams {
  MeshModel model = MeshModel::circle;
  int n = 64;   // circle/interval vertices, torus nx, disk rings, icosphere level
  int ny = 0;   // torus ny (defaults to n)
  double length = 0.0;  // circle circumference / interval length / torus lx / disk radius (0 = default)
  double width = 0.0;   // torus ly (0 = default)
};

Mesh build_mesh(const MeshParams& params);

/// Plain-text mesh format; grammar documented in docs/mesh_format.md.
Mesh read_mesh(std::istream& in);
void write_mesh(std::ostream& out, const Mesh& mesh);

/// Edges between distinct nodes, each listed once with the lower node first.
std::vector<std::pair<int, int>> node_edges(const Mesh& mesh);

}  // namespace finsler
