// SPDX-License-Identifier: Apache-2.0
//
// Graph geometry on meshes: shortest-path Finsler distances, complete
// r-packages with their Dirichlet regions, packing and covering numbers, and
// discrete Cheeger constants of vertex domains.
#pragma once

#include "finsler/fem.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace finsler {

/// Mesh-graph distances. Nodes are mesh vertices after identification; an
/// edge has the symmetrized F-length of its chart vector, averaged over the
/// elements sharing it.
class DistanceOracle {
 public:
  DistanceOracle(const Mesh& mesh, const MetricSpec& spec);

  struct Arc {
    int to;
    double length;
  };

  int num_nodes() const { return static_cast<int>(adjacency_.size()); }
  const std::vector<std::vector<Arc>>& adjacency() const { return adjacency_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<double>& edge_lengths() const { return lengths_; }
  double max_edge_length() const;

  /// Single-source shortest paths (Dijkstra).
  std::vector<double> distances(int source) const;
  double distance(int p, int q) const;
  /// Largest graph distance; all sources for meshes up to 4096 nodes,
  /// otherwise an evenly sampled set of 512 sources.
  double diameter() const;

 private:
  std::vector<std::vector<Arc>> adjacency_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<double> lengths_;
};

struct Packing {
  double radius = 0.0;
  std::vector<int> centers;
  /// Index into `centers` of the region owning each node (nearest center,
  /// ties to the lowest index).
  std::vector<int> assignment;
  std::vector<double> distance_to_center;
  /// distances from each center to every node.
  std::vector<std::vector<double>> center_distances;

  int num_regions() const { return static_cast<int>(centers.size()); }
  std::vector<int> region(int i) const;
};

/// Greedy maximal family of disjoint open r-balls: nodes are scanned in index
/// order and accepted when at distance >= 2r from every accepted center.
Packing complete_r_package(const DistanceOracle& oracle, double r);

struct SandwichCheck {
  /// B(p_i, r) inside D_i: largest r - d(p_i, v) over nodes v with d < r that
  /// belong to another region (<= 0 when the inclusion holds).
  double inner_violation = 0.0;
  /// D_i inside B(p_i, 2r): largest d(p_i, v) - 2r over v in D_i.
  double outer_violation = 0.0;
  bool holds(double tolerance = 0.0) const {
    return inner_violation <= tolerance && outer_violation <= tolerance;
  }
};

SandwichCheck verify_region_sandwich(const Packing& packing);

/// Disjointness (pairwise center distance >= 2r) and maximality (every node
/// within 2r of a center), re-checked from the stored distances.
bool verify_packing(const Packing& packing, double rel_tol = 1e-10);

/// Size of the complete r-package: a lower witness for the packing number.
int packing_number(const DistanceOracle& oracle, double r);

/// Centers of an r-cover (every node within distance r of a center): the
/// smaller of a greedy set cover and the centers of a complete r/2-package.
std::vector<int> covering_centers(const DistanceOracle& oracle, double r);
int covering_number(const DistanceOracle& oracle, double r);

/// Weighted graph for discrete cuts: interface measure of the dual surface
/// crossing each edge and lumped node measure.
class CutGraph {
 public:
  explicit CutGraph(const FemProblem& problem);

  struct Link {
    int to;
    double weight;  // interface measure
    double length;  // symmetrized F-length
  };

  int num_nodes() const { return static_cast<int>(links_.size()); }
  const std::vector<std::vector<Link>>& links() const { return links_; }
  const Eigen::VectorXd& node_measure() const { return measure_; }

  /// cut(S, D \ S) / min(m(S), m(D \ S)) for a side S given as a membership mask over D.
  double ratio(const std::vector<int>& domain, const std::vector<char>& in_side) const;

 private:
  std::vector<std::vector<Link>> links_;
  Eigen::VectorXd measure_;
};

struct CheegerResult {
  double value = 0.0;
  /// Nodes on the smaller-measure side of the best cut.
  std::vector<int> side;
  bool exhaustive = false;
};

/// Minimum over all 2-partitions of the domain; |domain| <= 24.
CheegerResult cheeger_exhaustive(const CutGraph& graph, const std::vector<int>& domain);

/// Sweep cuts along the second eigenvector of the domain's weighted graph
/// Laplacian and along distance orderings from `sources` (every node when the
/// domain is small), followed by single-node flip refinement.
CheegerResult cheeger_sweep(const CutGraph& graph, const std::vector<int>& domain,
                            const std::vector<int>& sources = {});

/// Exhaustive for domains of at most 18 nodes, sweep otherwise.
CheegerResult cheeger_constant(const CutGraph& graph, const std::vector<int>& domain,
                               const std::vector<int>& sources = {});

/// All nodes of the mesh.
std::vector<int> whole_domain(const CutGraph& graph);

struct RegionDiagnostics {
  int center = 0;
  int size = 0;
  double measure = 0.0;
  double cheeger = 0.0;
  bool connected = true;
};

struct PipelineResult {
  double radius = 0.0;
  /// min_i h(D_i)^2 / (4 (Lambda^{1+n} Theta^2)^2)
  double value = 0.0;
  double min_cheeger = 0.0;
  std::vector<RegionDiagnostics> regions;
  int num_regions() const { return static_cast<int>(regions.size()); }
};

/// Complete r-package, per-region Cheeger constants (on the component of each
/// region containing its center), combined with Lambda and Theta.
PipelineResult dirichlet_region_lower_pipeline(const FemProblem& problem, const DistanceOracle& oracle,
                                               double r, double Lambda = 1.0, double Theta = 1.0);

/// CSV columns: vertex,center_index,distance
void write_packing_csv(std::ostream& out, const Packing& packing);

}  // namespace finsler
