#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <span>
#include <vector>

namespace shells {

using Index = Eigen::Index;
using Coords = Eigen::MatrixX3d;
using Faces = Eigen::MatrixX3i;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct MeshOptions {
  // Center at the mass-weighted centroid and scale to unit surface area.
  bool normalize = true;
  // Replace negative cotangent weights by zero. Off by default so the
  // operator stays the standard linear FEM Laplacian.
  bool clamp_negative_cotangents = false;
};

/// Triangle mesh with its discrete operators. Built once by make_mesh and
/// treated as immutable afterwards.
///
/// `stiffness` is the positive semi-definite cotangent matrix: off-diagonal
/// entries are -(cot a + cot b)/2 and every row sums to zero.
/// `vertex_masses` is the barycentric lumped mass matrix diagonal.
struct TriMesh {
  Coords vertices;
  Faces triangles;
  Eigen::VectorXd vertex_masses;
  SparseMatrix stiffness;
  Coords normals;

  Index num_vertices() const { return vertices.rows(); }
  Index num_faces() const { return triangles.rows(); }
  double surface_area() const { return vertex_masses.sum(); }
};

struct LaplacianPair {
  SparseMatrix stiffness;
  Eigen::VectorXd masses;
};

/// Filters degenerate faces (area <= 1e-12 of the total), drops vertices no
/// face references, optionally normalizes, and assembles the operators.
TriMesh make_mesh(Coords vertices, Faces triangles, const MeshOptions& options = {});

/// Same connectivity with new vertex positions; operators are re-assembled,
/// no normalization is applied.
TriMesh with_vertices(const TriMesh& mesh, Coords vertices, bool clamp_negative_cotangents = false);

LaplacianPair assemble_laplacian(const Coords& vertices, const Faces& triangles,
                                 bool clamp_negative_cotangents = false);

Eigen::VectorXd face_areas(const Coords& vertices, const Faces& triangles);

/// Area-weighted average of incident face normals, normalized. Vertices whose
/// accumulated normal vanishes get the direction from the centroid instead.
Coords vertex_normals(const Coords& vertices, const Faces& triangles);

/// Cotangent weight (cot a + cot b)/2 per undirected edge, keyed by the
/// stiffness sparsity pattern. Returns -stiffness off-diagonals.
SparseMatrix cotangent_weights(const TriMesh& mesh);

enum class MapDirection { TargetToSource, SourceToTarget };

/// Discrete correspondence stored as one index per domain vertex.
/// For the TargetToSource direction, assignments[m] is the source vertex
/// matched to target vertex m.
struct PointMap {
  std::vector<Index> assignments;
  Index codomain_size = 0;
  MapDirection direction = MapDirection::TargetToSource;

  Index size() const { return static_cast<Index>(assignments.size()); }
};

/// Throws IndexOutOfRange when an entry falls outside [0, codomain_size).
void validate(const PointMap& map);

PointMap identity_map(Index n, MapDirection direction = MapDirection::TargetToSource);

/// Compressed undirected edge adjacency with Euclidean edge lengths.
struct EdgeGraph {
  std::vector<Index> offsets;
  std::vector<Index> neighbors;
  std::vector<double> lengths;

  Index num_vertices() const { return static_cast<Index>(offsets.size()) - 1; }
  std::span<const Index> neighbors_of(Index v) const {
    return {neighbors.data() + offsets[v], neighbors.data() + offsets[v + 1]};
  }
  std::span<const double> lengths_of(Index v) const {
    return {lengths.data() + offsets[v], lengths.data() + offsets[v + 1]};
  }
};

EdgeGraph build_edge_graph(const Coords& vertices, const Faces& triangles);

/// Builds a graph from an explicit undirected edge list.
EdgeGraph build_edge_graph(const Coords& vertices, std::span<const std::pair<Index, Index>> edges);

/// Single-source shortest paths. Unreachable vertices get +infinity.
std::vector<double> dijkstra(const EdgeGraph& graph, Index source);

/// Graph geodesics over the mesh edges. Logs a warning when part of the
/// mesh is unreachable.
std::vector<double> geodesic_distances(const TriMesh& mesh, Index source);

/// Number of edges shared by more than two faces.
Index count_nonmanifold_edges(const Faces& triangles);

}  // namespace shells
