// SPDX-License-Identifier: Apache-2.0
#include "finsler/packing.hpp"

#include "finsler/eigensolver.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <queue>

namespace finsler {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Chart vector of edge (i, j) of element e.
Vec chart_edge(const Mesh& mesh, int e, int i, int j) {
  const auto& c = mesh.charts[e].local;
  Vec v(mesh.dimension);
  for (int d = 0; d < mesh.dimension; ++d) v(d) = c[j](d) - c[i](d);
  return v;
}

double symmetric_length(const MinkowskiNorm& norm, const Vec& v) { return 0.5 * (norm(v) + norm(-v)); }

template <typename NormAt>
void for_each_element_edge(const Mesh& mesh, NormAt&& norm_at,
                           const std::function<void(int e, int i, int j, int a, int b, const MinkowskiNorm&)>& fn) {
  const int per = mesh.vertices_per_element();
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const MinkowskiNorm& norm = norm_at(static_cast<int>(e));
    for (int i = 0; i < per; ++i)
      for (int j = i + 1; j < per; ++j) {
        const int a = mesh.node_of_vertex[mesh.elements[e][i]];
        const int b = mesh.node_of_vertex[mesh.elements[e][j]];
        if (a != b) fn(static_cast<int>(e), i, j, a, b, norm);
      }
  }
}

std::vector<double> dijkstra(const std::vector<std::vector<DistanceOracle::Arc>>& adj, int source) {
  std::vector<double> dist(adj.size(), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (const auto& arc : adj[v]) {
      const double nd = d + arc.length;
      if (nd < dist[arc.to]) {
        dist[arc.to] = nd;
        queue.emplace(nd, arc.to);
      }
    }
  }
  return dist;
}

std::vector<char> mask_of(int n, const std::vector<int>& nodes) {
  std::vector<char> m(n, 0);
  for (int v : nodes) {
    if (v < 0 || v >= n) throw InvalidArgument("node index out of range");
    m[v] = 1;
  }
  return m;
}

bool connected_within(const CutGraph& g, const std::vector<int>& domain, const std::vector<char>& in_domain) {
  if (domain.empty()) return false;
  std::vector<char> seen(g.num_nodes(), 0);
  std::vector<int> stack{domain.front()};
  seen[domain.front()] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& l : g.links()[v])
      if (in_domain[l.to] && !seen[l.to]) {
        seen[l.to] = 1;
        ++count;
        stack.push_back(l.to);
      }
  }
  return count == domain.size();
}

// Domain restricted to local indices with internal links.
struct LocalGraph {
  std::vector<int> nodes;
  std::vector<std::vector<std::pair<int, double>>> adj;  // (local, weight)
  std::vector<std::vector<std::pair<int, double>>> lengths;
  std::vector<double> measure;
  double total = 0.0;
};

LocalGraph localize(const CutGraph& g, const std::vector<int>& domain) {
  LocalGraph lg;
  lg.nodes = domain;
  std::sort(lg.nodes.begin(), lg.nodes.end());
  lg.nodes.erase(std::unique(lg.nodes.begin(), lg.nodes.end()), lg.nodes.end());
  std::vector<int> local(g.num_nodes(), -1);
  for (std::size_t i = 0; i < lg.nodes.size(); ++i) {
    if (lg.nodes[i] < 0 || lg.nodes[i] >= g.num_nodes()) throw InvalidArgument("domain node out of range");
    local[lg.nodes[i]] = static_cast<int>(i);
  }
  const int m = static_cast<int>(lg.nodes.size());
  lg.adj.resize(m);
  lg.lengths.resize(m);
  lg.measure.resize(m);
  for (int i = 0; i < m; ++i) {
    lg.measure[i] = g.node_measure()(lg.nodes[i]);
    lg.total += lg.measure[i];
    for (const auto& l : g.links()[lg.nodes[i]])
      if (local[l.to] >= 0) {
        lg.adj[i].emplace_back(local[l.to], l.weight);
        lg.lengths[i].emplace_back(local[l.to], l.length);
      }
  }
  return lg;
}

double ratio_of(double cut, double side_mass, double total) {
  const double small = std::min(side_mass, total - side_mass);
  return small > 0 ? cut / small : kInf;
}

CheegerResult to_result(const LocalGraph& lg, const std::vector<char>& side, double value, bool exhaustive) {
  CheegerResult r;
  r.value = value;
  r.exhaustive = exhaustive;
  double mass = 0.0;
  for (std::size_t i = 0; i < side.size(); ++i)
    if (side[i]) mass += lg.measure[i];
  const bool take = mass <= lg.total - mass;
  for (std::size_t i = 0; i < side.size(); ++i)
    if (static_cast<bool>(side[i]) == take) r.side.push_back(lg.nodes[i]);
  return r;
}

// Sweep over an ordering: best prefix cut.
void sweep(const LocalGraph& lg, const std::vector<int>& order, double& best, std::vector<char>& best_side) {
  const int m = static_cast<int>(order.size());
  std::vector<char> in(m, 0);
  double cut = 0.0, mass = 0.0;
  int best_k = -1;
  double local_best = best;
  for (int k = 0; k + 1 < m; ++k) {
    const int v = order[k];
    for (const auto& [u, w] : lg.adj[v]) cut += in[u] ? -w : w;
    in[v] = 1;
    mass += lg.measure[v];
    const double r = ratio_of(cut, mass, lg.total);
    if (r < local_best * (1.0 - 1e-14)) {
      local_best = r;
      best_k = k;
    }
  }
  if (best_k >= 0) {
    best = local_best;
    best_side.assign(m, 0);
    for (int k = 0; k <= best_k; ++k) best_side[order[k]] = 1;
  }
}

void flip_refine(const LocalGraph& lg, std::vector<char>& side, double& value) {
  const int m = static_cast<int>(side.size());
  double cut = 0.0, mass = 0.0;
  for (int v = 0; v < m; ++v) {
    if (side[v]) mass += lg.measure[v];
    for (const auto& [u, w] : lg.adj[v])
      if (u > v && side[u] != side[v]) cut += w;
  }
  for (int pass = 0; pass < 200; ++pass) {
    bool improved = false;
    for (int v = 0; v < m; ++v) {
      double dc = 0.0;
      for (const auto& [u, w] : lg.adj[v]) dc += (side[u] == side[v]) ? w : -w;
      const double dm = side[v] ? -lg.measure[v] : lg.measure[v];
      const double r = ratio_of(cut + dc, mass + dm, lg.total);
      if (r < value * (1.0 - 1e-12)) {
        side[v] = !side[v];
        cut += dc;
        mass += dm;
        value = r;
        improved = true;
      }
    }
    if (!improved) break;
  }
}

std::vector<double> local_distances(const LocalGraph& lg, int source) {
  std::vector<double> dist(lg.nodes.size(), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (const auto& [u, len] : lg.lengths[v])
      if (d + len < dist[u]) {
        dist[u] = d + len;
        queue.emplace(dist[u], u);
      }
  }
  return dist;
}

std::vector<int> order_by(const std::vector<double>& key) {
  std::vector<int> order(key.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
  return order;
}

}  // namespace

// ---------------------------------------------------------------------------

DistanceOracle::DistanceOracle(const Mesh& mesh, const MetricSpec& spec) {
  if (spec.dimension != mesh.dimension) throw InvalidArgument("distance oracle: metric dimension mismatch");
  std::optional<MinkowskiNorm> constant;
  if (spec.spatially_constant) constant = spec.at(Location{});
  std::vector<MinkowskiNorm> norms;
  if (!constant) {
    norms.reserve(mesh.elements.size());
    for (const auto& c : mesh.charts) norms.push_back(spec.at(c.anchor));
  }
  auto norm_at = [&](int e) -> const MinkowskiNorm& { return constant ? *constant : norms[e]; };
  std::map<std::pair<int, int>, std::pair<double, int>> acc;
  for_each_element_edge(mesh, norm_at, [&](int e, int i, int j, int a, int b, const MinkowskiNorm& norm) {
    auto& slot = acc[std::minmax(a, b)];
    slot.first += symmetric_length(norm, chart_edge(mesh, e, i, j));
    slot.second += 1;
  });
  adjacency_.assign(mesh.num_nodes, {});
  for (const auto& [key, val] : acc) {
    const double len = val.first / val.second;
    edges_.push_back(key);
    lengths_.push_back(len);
    adjacency_[key.first].push_back({key.second, len});
    adjacency_[key.second].push_back({key.first, len});
  }
  const auto d = dijkstra(adjacency_, 0);
  for (double v : d)
    if (!std::isfinite(v)) throw InvalidArgument("distance oracle: mesh graph is disconnected");
}

double DistanceOracle::max_edge_length() const {
  return lengths_.empty() ? 0.0 : *std::max_element(lengths_.begin(), lengths_.end());
}

std::vector<double> DistanceOracle::distances(int source) const {
  if (source < 0 || source >= num_nodes()) throw InvalidArgument("distances: source out of range");
  return dijkstra(adjacency_, source);
}

double DistanceOracle::distance(int p, int q) const {
  if (q < 0 || q >= num_nodes()) throw InvalidArgument("distance: node out of range");
  return distances(p)[q];
}

double DistanceOracle::diameter() const {
  const int n = num_nodes();
  const int stride = n <= 4096 ? 1 : n / 512;
  double best = 0.0;
  for (int s = 0; s < n; s += stride) {
    const auto d = dijkstra(adjacency_, s);
    best = std::max(best, *std::max_element(d.begin(), d.end()));
  }
  return best;
}

std::vector<int> Packing::region(int i) const {
  std::vector<int> out;
  for (std::size_t v = 0; v < assignment.size(); ++v)
    if (assignment[v] == i) out.push_back(static_cast<int>(v));
  return out;
}

Packing complete_r_package(const DistanceOracle& oracle, double r) {
  if (!(r > 0) || !std::isfinite(r)) throw InvalidArgument("complete_r_package: r must be positive");
  Packing p;
  p.radius = r;
  const int n = oracle.num_nodes();
  const double need = 2.0 * r * (1.0 - 1e-10);
  for (int v = 0; v < n; ++v) {
    bool free = true;
    for (const auto& d : p.center_distances)
      if (d[v] < need) {
        free = false;
        break;
      }
    if (!free) continue;
    p.centers.push_back(v);
    p.center_distances.push_back(oracle.distances(v));
  }
  p.assignment.assign(n, 0);
  p.distance_to_center.assign(n, kInf);
  for (int v = 0; v < n; ++v)
    for (int i = 0; i < p.num_regions(); ++i)
      if (p.center_distances[i][v] < p.distance_to_center[v]) {
        p.distance_to_center[v] = p.center_distances[i][v];
        p.assignment[v] = i;
      }
  return p;
}

SandwichCheck verify_region_sandwich(const Packing& p) {
  SandwichCheck c;
  c.inner_violation = -kInf;
  c.outer_violation = -kInf;
  const int n = static_cast<int>(p.assignment.size());
  for (int i = 0; i < p.num_regions(); ++i)
    for (int v = 0; v < n; ++v) {
      const double d = p.center_distances[i][v];
      if (d < p.radius && p.assignment[v] != i) c.inner_violation = std::max(c.inner_violation, p.radius - d);
    }
  for (int v = 0; v < n; ++v)
    c.outer_violation = std::max(c.outer_violation, p.distance_to_center[v] - 2.0 * p.radius);
  if (c.inner_violation == -kInf) c.inner_violation = 0.0;
  return c;
}

bool verify_packing(const Packing& p, double rel_tol) {
  const double two_r = 2.0 * p.radius;
  for (int i = 0; i < p.num_regions(); ++i)
    for (int j = 0; j < i; ++j)
      if (p.center_distances[j][p.centers[i]] < two_r * (1.0 - rel_tol)) return false;
  // A node at distance >= 2r from every center could still be added.
  for (double d : p.distance_to_center)
    if (d >= two_r * (1.0 - rel_tol)) return false;
  return true;
}

int packing_number(const DistanceOracle& oracle, double r) { return complete_r_package(oracle, r).num_regions(); }

std::vector<int> covering_centers(const DistanceOracle& oracle, double r) {
  if (!(r > 0) || !std::isfinite(r)) throw InvalidArgument("covering: r must be positive");
  const int n = oracle.num_nodes();
  const double reach = r * (1.0 + 1e-10);
  std::vector<std::vector<int>> ball(n);
  for (int v = 0; v < n; ++v) {
    const auto d = oracle.distances(v);
    for (int u = 0; u < n; ++u)
      if (d[u] <= reach) ball[v].push_back(u);
  }
  std::vector<char> covered(n, 0);
  int remaining = n;
  std::vector<int> greedy;
  while (remaining > 0) {
    int best = -1, best_gain = 0;
    for (int v = 0; v < n; ++v) {
      int gain = 0;
      for (int u : ball[v]) gain += !covered[u];
      if (gain > best_gain) {
        best_gain = gain;
        best = v;
      }
    }
    greedy.push_back(best);
    for (int u : ball[best])
      if (!covered[u]) {
        covered[u] = 1;
        --remaining;
      }
  }
  // Centers of a complete r/2-package cover within 2 (r/2) = r.
  const Packing half = complete_r_package(oracle, 0.5 * r);
  if (half.num_regions() < static_cast<int>(greedy.size())) return half.centers;
  return greedy;
}

int covering_number(const DistanceOracle& oracle, double r) {
  return static_cast<int>(covering_centers(oracle, r).size());
}

// ---------------------------------------------------------------------------

CutGraph::CutGraph(const FemProblem& problem) {
  const Mesh& mesh = problem.mesh();
  const auto& els = problem.elements();
  std::map<std::pair<int, int>, std::array<double, 3>> acc;  // weight, length sum, count
  auto norm_at = [&](int e) -> const MinkowskiNorm& { return els[e].norm; };
  for_each_element_edge(mesh, norm_at, [&](int e, int i, int j, int a, int b, const MinkowskiNorm& norm) {
    auto& slot = acc[std::minmax(a, b)];
    const auto& c = mesh.charts[e].local;
    double area = 0.0;
    if (mesh.dimension == 1) {
      Vec omega(1);
      omega << 1.0;
      const Vec n0 = norm.legendre_inv(omega);
      area = std::abs(n0(0)) / norm(n0);
    } else {
      const Eigen::Vector2d mid = 0.5 * (c[i] + c[j]);
      const Eigen::Vector2d centroid = (c[0] + c[1] + c[2]) / 3.0;
      const Eigen::Vector2d t = centroid - mid;
      Vec omega(2);
      omega << -t.y(), t.x();
      const Vec n0 = norm.legendre_inv(omega);
      const double s = norm(n0);  // F*(omega)
      area = std::abs(n0(0) * t.y() - n0(1) * t.x()) / s;
    }
    slot[0] += els[e].sigma * area;
    slot[1] += symmetric_length(norm, chart_edge(mesh, e, i, j));
    slot[2] += 1.0;
  });
  links_.assign(mesh.num_nodes, {});
  for (const auto& [key, val] : acc) {
    const double len = val[1] / val[2];
    links_[key.first].push_back({key.second, val[0], len});
    links_[key.second].push_back({key.first, val[0], len});
  }
  measure_ = problem.node_mass();
}

double CutGraph::ratio(const std::vector<int>& domain, const std::vector<char>& in_side) const {
  const auto in_domain = mask_of(num_nodes(), domain);
  double cut = 0.0, mass = 0.0, total = 0.0;
  for (int v : domain) {
    total += measure_(v);
    if (in_side[v]) mass += measure_(v);
    for (const auto& l : links_[v])
      if (in_domain[l.to] && l.to > v && in_side[l.to] != in_side[v]) cut += l.weight;
  }
  return ratio_of(cut, mass, total);
}

std::vector<int> whole_domain(const CutGraph& graph) {
  std::vector<int> d(graph.num_nodes());
  std::iota(d.begin(), d.end(), 0);
  return d;
}

CheegerResult cheeger_exhaustive(const CutGraph& graph, const std::vector<int>& domain) {
  const LocalGraph lg = localize(graph, domain);
  const int m = static_cast<int>(lg.nodes.size());
  if (m < 2) throw InvalidArgument("cheeger: domain needs at least two nodes");
  if (m > 24) throw InvalidArgument("cheeger_exhaustive: domain too large");
  if (!connected_within(graph, lg.nodes, mask_of(graph.num_nodes(), lg.nodes)))
    throw InvalidArgument("cheeger: domain is not connected");
  std::vector<std::tuple<int, int, double>> links;
  for (int v = 0; v < m; ++v)
    for (const auto& [u, w] : lg.adj[v])
      if (u > v) links.emplace_back(v, u, w);
  double best = kInf;
  unsigned long best_mask = 0;
  // The last node always stays outside the side, fixing one representative
  // per unordered partition.
  const unsigned long limit = 1UL << (m - 1);
  for (unsigned long mask = 1; mask < limit; ++mask) {
    double cut = 0.0, mass = 0.0;
    for (const auto& [a, b, w] : links)
      if (((mask >> a) & 1UL) != ((mask >> b) & 1UL)) cut += w;
    for (int v = 0; v < m - 1; ++v)
      if ((mask >> v) & 1UL) mass += lg.measure[v];
    const double r = ratio_of(cut, mass, lg.total);
    if (r < best) {
      best = r;
      best_mask = mask;
    }
  }
  std::vector<char> side(m, 0);
  for (int v = 0; v < m; ++v) side[v] = (best_mask >> v) & 1UL;
  return to_result(lg, side, best, true);
}

CheegerResult cheeger_sweep(const CutGraph& graph, const std::vector<int>& domain, const std::vector<int>& sources) {
  const LocalGraph lg = localize(graph, domain);
  const int m = static_cast<int>(lg.nodes.size());
  if (m < 2) throw InvalidArgument("cheeger: domain needs at least two nodes");
  if (!connected_within(graph, lg.nodes, mask_of(graph.num_nodes(), lg.nodes)))
    throw InvalidArgument("cheeger: domain is not connected");

  double best = kInf;
  std::vector<char> best_side;

  // Spectral orderings: low eigenvectors of the weighted graph Laplacian
  // (conductances weight / length) against the node measure.
  {
    std::vector<Eigen::Triplet<double>> lt, mt;
    for (int v = 0; v < m; ++v) {
      double deg = 0.0;
      for (std::size_t q = 0; q < lg.adj[v].size(); ++q) {
        const double c = lg.adj[v][q].second / lg.lengths[v][q].second;
        lt.emplace_back(v, lg.adj[v][q].first, -c);
        deg += c;
      }
      lt.emplace_back(v, v, deg);
      mt.emplace_back(v, v, lg.measure[v]);
    }
    SparseMatrix L(m, m), B(m, m);
    L.setFromTriplets(lt.begin(), lt.end());
    B.setFromTriplets(mt.begin(), mt.end());
    const int want = std::min(m, 8);
    const auto pairs = lowest_generalized_eigenpairs(L, B, want);
    const auto sweep_vector = [&](const Eigen::VectorXd& f) {
      sweep(lg, order_by(std::vector<double>(f.data(), f.data() + m)), best, best_side);
    };
    for (int j = 1; j < want; ++j) sweep_vector(pairs.vectors.col(j));
    // Rotations within pairs of low eigenvectors; degenerate eigenspaces
    // (symmetric domains) have no preferred basis.
    constexpr int kAngles = 24;
    for (int a = 1; a < want; ++a)
      for (int b = a + 1; b < want; ++b)
        for (int t = 1; t < kAngles; ++t) {
          const double phi = std::numbers::pi * t / kAngles;
          sweep_vector(std::cos(phi) * pairs.vectors.col(a) + std::sin(phi) * pairs.vectors.col(b));
        }
  }

  // Distance orderings.
  std::vector<int> local_sources;
  if (m <= 64) {
    local_sources.resize(m);
    std::iota(local_sources.begin(), local_sources.end(), 0);
  } else {
    for (int s : sources) {
      const auto it = std::lower_bound(lg.nodes.begin(), lg.nodes.end(), s);
      if (it != lg.nodes.end() && *it == s) local_sources.push_back(static_cast<int>(it - lg.nodes.begin()));
    }
    if (local_sources.empty()) {
      local_sources.push_back(0);
      const auto d0 = local_distances(lg, 0);
      local_sources.push_back(static_cast<int>(std::max_element(d0.begin(), d0.end()) - d0.begin()));
    }
  }
  for (int s : local_sources) sweep(lg, order_by(local_distances(lg, s)), best, best_side);

  flip_refine(lg, best_side, best);
  return to_result(lg, best_side, best, false);
}

CheegerResult cheeger_constant(const CutGraph& graph, const std::vector<int>& domain, const std::vector<int>& sources) {
  std::vector<int> unique = domain;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (unique.size() <= 18) return cheeger_exhaustive(graph, unique);
  return cheeger_sweep(graph, unique, sources);
}

PipelineResult dirichlet_region_lower_pipeline(const FemProblem& problem, const DistanceOracle& oracle, double r,
                                               double Lambda, double Theta) {
  if (!(Lambda >= 1.0) || !(Theta >= 1.0)) throw InvalidArgument("pipeline: Lambda and Theta must be >= 1");
  const Packing pack = complete_r_package(oracle, r);
  const CutGraph graph(problem);
  PipelineResult out;
  out.radius = r;
  out.min_cheeger = kInf;
  for (int i = 0; i < pack.num_regions(); ++i) {
    RegionDiagnostics diag;
    diag.center = pack.centers[i];
    const auto region = pack.region(i);
    const auto in_region = mask_of(graph.num_nodes(), region);
    // Component of the center.
    std::vector<char> seen(graph.num_nodes(), 0);
    std::vector<int> comp{diag.center}, stack{diag.center};
    seen[diag.center] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& l : graph.links()[v])
        if (in_region[l.to] && !seen[l.to]) {
          seen[l.to] = 1;
          comp.push_back(l.to);
          stack.push_back(l.to);
        }
    }
    diag.connected = comp.size() == region.size();
    diag.size = static_cast<int>(comp.size());
    for (int v : comp) diag.measure += graph.node_measure()(v);
    diag.cheeger = comp.size() >= 2 ? cheeger_constant(graph, comp, {diag.center}).value : 0.0;
    out.min_cheeger = std::min(out.min_cheeger, diag.cheeger);
    out.regions.push_back(diag);
  }
  const int n = problem.dimension();
  const double denom = std::pow(Lambda, 1 + n) * Theta * Theta;
  out.value = out.min_cheeger * out.min_cheeger / (4.0 * denom * denom);
  return out;
}

void write_packing_csv(std::ostream& out, const Packing& p) {
  out << "vertex,center_index,distance\n";
  char buf[96];
  for (std::size_t v = 0; v < p.assignment.size(); ++v) {
    std::snprintf(buf, sizeof buf, "%zu,%d,%.15g\n", v, p.assignment[v], p.distance_to_center[v]);
    out << buf;
  }
}

}  // namespace finsler
