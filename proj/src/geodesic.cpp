#include "shells/errors.hpp"
#include "shells/mesh.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <string>

namespace shells {

EdgeGraph build_edge_graph(const Coords& vertices, std::span<const std::pair<Index, Index>> edges) {
  const Index n = vertices.rows();
  std::vector<std::pair<Index, Index>> directed;
  directed.reserve(edges.size() * 2);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw IndexOutOfRange("edge endpoint outside the vertex range");
    if (a == b) continue;
    directed.emplace_back(a, b);
    directed.emplace_back(b, a);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  EdgeGraph g;
  g.offsets.assign(static_cast<size_t>(n) + 1, 0);
  for (const auto& e : directed) ++g.offsets[static_cast<size_t>(e.first) + 1];
  for (Index v = 0; v < n; ++v) g.offsets[static_cast<size_t>(v) + 1] += g.offsets[static_cast<size_t>(v)];
  g.neighbors.resize(directed.size());
  g.lengths.resize(directed.size());
  for (size_t i = 0; i < directed.size(); ++i) {
    const auto [a, b] = directed[i];
    g.neighbors[i] = b;
    g.lengths[i] = (vertices.row(a) - vertices.row(b)).norm();
  }
  return g;
}

EdgeGraph build_edge_graph(const Coords& vertices, const Faces& triangles) {
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(static_cast<size_t>(triangles.rows()) * 3);
  for (Index f = 0; f < triangles.rows(); ++f)
    for (int k = 0; k < 3; ++k) edges.emplace_back(triangles(f, k), triangles(f, (k + 1) % 3));
  return build_edge_graph(vertices, edges);
}

std::vector<double> dijkstra(const EdgeGraph& graph, Index source) {
  const Index n = graph.num_vertices();
  if (source < 0 || source >= n)
    throw IndexOutOfRange("source vertex " + std::to_string(source) + " outside [0, " + std::to_string(n) + ")");

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<size_t>(n), inf);
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[static_cast<size_t>(source)] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[static_cast<size_t>(v)]) continue;
    const auto nbrs = graph.neighbors_of(v);
    const auto lens = graph.lengths_of(v);
    for (size_t i = 0; i < nbrs.size(); ++i) {
      const double cand = d + lens[i];
      if (cand < dist[static_cast<size_t>(nbrs[i])]) {
        dist[static_cast<size_t>(nbrs[i])] = cand;
        queue.emplace(cand, nbrs[i]);
      }
    }
  }
  return dist;
}

std::vector<double> geodesic_distances(const TriMesh& mesh, Index source) {
  const EdgeGraph graph = build_edge_graph(mesh.vertices, mesh.triangles);
  std::vector<double> dist = dijkstra(graph, source);
  const auto unreachable = std::count_if(dist.begin(), dist.end(), [](double d) { return std::isinf(d); });
  if (unreachable > 0) spdlog::warn("{} vertices unreachable from vertex {}", unreachable, source);
  return dist;
}

}  // namespace shells
