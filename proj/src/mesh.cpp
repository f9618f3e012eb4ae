#include "shells/mesh.hpp"

#include "shells/errors.hpp"

#include <Eigen/Geometry>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace shells {

namespace {

Eigen::Vector3d row3(const Coords& v, Index i) { return v.row(i).transpose(); }

double cotangent(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double cross = a.cross(b).norm();
  return a.dot(b) / cross;
}

}  // namespace

Eigen::VectorXd face_areas(const Coords& vertices, const Faces& triangles) {
  Eigen::VectorXd areas(triangles.rows());
  for (Index f = 0; f < triangles.rows(); ++f) {
    const Eigen::Vector3d a = row3(vertices, triangles(f, 0));
    const Eigen::Vector3d b = row3(vertices, triangles(f, 1));
    const Eigen::Vector3d c = row3(vertices, triangles(f, 2));
    areas[f] = 0.5 * (b - a).cross(c - a).norm();
  }
  return areas;
}

LaplacianPair assemble_laplacian(const Coords& vertices, const Faces& triangles,
                                 bool clamp_negative_cotangents) {
  const Index n = vertices.rows();
  if (triangles.rows() == 0) throw DegenerateGeometry("no triangles to assemble");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(triangles.rows()) * 12);
  Eigen::VectorXd masses = Eigen::VectorXd::Zero(n);

  for (Index f = 0; f < triangles.rows(); ++f) {
    const Index ids[3] = {triangles(f, 0), triangles(f, 1), triangles(f, 2)};
    const Eigen::Vector3d p[3] = {row3(vertices, ids[0]), row3(vertices, ids[1]),
                                  row3(vertices, ids[2])};
    const double area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
    for (int c = 0; c < 3; ++c) masses[ids[c]] += area / 3.0;

    // Corner c faces edge (c+1, c+2).
    for (int c = 0; c < 3; ++c) {
      const int i = (c + 1) % 3;
      const int j = (c + 2) % 3;
      double w = 0.5 * cotangent(p[i] - p[c], p[j] - p[c]);
      if (clamp_negative_cotangents) w = std::max(w, 0.0);
      triplets.emplace_back(ids[i], ids[j], -w);
      triplets.emplace_back(ids[j], ids[i], -w);
      triplets.emplace_back(ids[i], ids[i], w);
      triplets.emplace_back(ids[j], ids[j], w);
    }
  }

  SparseMatrix stiffness(n, n);
  stiffness.setFromTriplets(triplets.begin(), triplets.end());
  stiffness.makeCompressed();
  return {std::move(stiffness), std::move(masses)};
}

Coords vertex_normals(const Coords& vertices, const Faces& triangles) {
  Coords normals = Coords::Zero(vertices.rows(), 3);
  for (Index f = 0; f < triangles.rows(); ++f) {
    const Eigen::Vector3d a = row3(vertices, triangles(f, 0));
    const Eigen::Vector3d b = row3(vertices, triangles(f, 1));
    const Eigen::Vector3d c = row3(vertices, triangles(f, 2));
    const Eigen::RowVector3d weighted = (b - a).cross(c - a).transpose();
    for (int k = 0; k < 3; ++k) normals.row(triangles(f, k)) += weighted;
  }
  const Eigen::RowVector3d centroid = vertices.colwise().mean();
  for (Index v = 0; v < normals.rows(); ++v) {
    double len = normals.row(v).norm();
    if (!(len > 1e-300)) {
      normals.row(v) = vertices.row(v) - centroid;
      len = normals.row(v).norm();
      if (!(len > 1e-300)) {
        normals.row(v) = Eigen::RowVector3d::UnitZ();
        len = 1.0;
      }
    }
    normals.row(v) /= len;
  }
  return normals;
}

TriMesh make_mesh(Coords vertices, Faces triangles, const MeshOptions& options) {
  if (triangles.rows() == 0) throw EmptyMesh("mesh has no faces");
  const Index n = vertices.rows();
  for (Index f = 0; f < triangles.rows(); ++f)
    for (int k = 0; k < 3; ++k)
      if (triangles(f, k) < 0 || triangles(f, k) >= n)
        throw IndexOutOfRange("face " + std::to_string(f) + " references vertex " +
                              std::to_string(triangles(f, k)) + " of " + std::to_string(n));
  if (!vertices.allFinite()) throw NonFiniteValue("mesh has non-finite vertex coordinates");

  // Degenerate face filtering.
  const Eigen::VectorXd areas = face_areas(vertices, triangles);
  const double total = areas.sum();
  std::vector<Index> keep;
  keep.reserve(static_cast<size_t>(triangles.rows()));
  for (Index f = 0; f < triangles.rows(); ++f) {
    const bool repeated = triangles(f, 0) == triangles(f, 1) || triangles(f, 1) == triangles(f, 2) ||
                          triangles(f, 0) == triangles(f, 2);
    if (!repeated && areas[f] > 1e-12 * total) keep.push_back(f);
  }
  if (keep.empty()) throw DegenerateGeometry("every face is degenerate");
  if (static_cast<Index>(keep.size()) != triangles.rows()) {
    spdlog::warn("dropped {} degenerate faces", triangles.rows() - static_cast<Index>(keep.size()));
    Faces filtered(static_cast<Index>(keep.size()), 3);
    for (size_t i = 0; i < keep.size(); ++i) filtered.row(static_cast<Index>(i)) = triangles.row(keep[i]);
    triangles = std::move(filtered);
  }

  // Unreferenced vertices would carry zero mass.
  std::vector<Index> remap(static_cast<size_t>(n), -1);
  for (Index f = 0; f < triangles.rows(); ++f)
    for (int k = 0; k < 3; ++k) remap[static_cast<size_t>(triangles(f, k))] = 0;
  Index used = 0;
  for (auto& r : remap)
    if (r == 0) r = used++;
  if (used != n) {
    spdlog::warn("dropped {} unreferenced vertices", n - used);
    Coords compact(used, 3);
    for (Index v = 0; v < n; ++v)
      if (remap[static_cast<size_t>(v)] >= 0) compact.row(remap[static_cast<size_t>(v)]) = vertices.row(v);
    for (Index f = 0; f < triangles.rows(); ++f)
      for (int k = 0; k < 3; ++k) triangles(f, k) = static_cast<int>(remap[static_cast<size_t>(triangles(f, k))]);
    vertices = std::move(compact);
  }

  if (const Index bad = count_nonmanifold_edges(triangles); bad > 0)
    spdlog::warn("mesh has {} non-manifold edges", bad);

  if (options.normalize) {
    const LaplacianPair raw = assemble_laplacian(vertices, triangles, false);
    const double area = raw.masses.sum();
    const Eigen::RowVector3d centroid = (raw.masses.asDiagonal() * vertices).colwise().sum() / area;
    vertices.rowwise() -= centroid;
    vertices /= std::sqrt(area);
  }

  TriMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.triangles = std::move(triangles);
  LaplacianPair ops = assemble_laplacian(mesh.vertices, mesh.triangles, options.clamp_negative_cotangents);
  mesh.stiffness = std::move(ops.stiffness);
  mesh.vertex_masses = std::move(ops.masses);
  mesh.normals = vertex_normals(mesh.vertices, mesh.triangles);
  return mesh;
}

TriMesh with_vertices(const TriMesh& mesh, Coords vertices, bool clamp_negative_cotangents) {
  if (vertices.rows() != mesh.num_vertices())
    throw DimensionMismatch("vertex count differs from the mesh connectivity");
  TriMesh out;
  out.vertices = std::move(vertices);
  out.triangles = mesh.triangles;
  LaplacianPair ops = assemble_laplacian(out.vertices, out.triangles, clamp_negative_cotangents);
  out.stiffness = std::move(ops.stiffness);
  out.vertex_masses = std::move(ops.masses);
  out.normals = vertex_normals(out.vertices, out.triangles);
  return out;
}

SparseMatrix cotangent_weights(const TriMesh& mesh) {
  SparseMatrix w = -mesh.stiffness;
  for (Index k = 0; k < w.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(w, k); it; ++it)
      if (it.row() == it.col()) it.valueRef() = 0.0;
  w.prune(0.0);
  return w;
}

void validate(const PointMap& map) {
  for (size_t i = 0; i < map.assignments.size(); ++i) {
    const Index a = map.assignments[i];
    if (a < 0 || a >= map.codomain_size)
      throw IndexOutOfRange("point map entry " + std::to_string(i) + " = " + std::to_string(a) +
                            " outside [0, " + std::to_string(map.codomain_size) + ")");
  }
}

PointMap identity_map(Index n, MapDirection direction) {
  PointMap map;
  map.assignments.resize(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) map.assignments[static_cast<size_t>(i)] = i;
  map.codomain_size = n;
  map.direction = direction;
  return map;
}

Index count_nonmanifold_edges(const Faces& triangles) {
  std::map<std::pair<int, int>, int> counts;
  for (Index f = 0; f < triangles.rows(); ++f)
    for (int k = 0; k < 3; ++k) {
      int a = triangles(f, k), b = triangles(f, (k + 1) % 3);
      if (a > b) std::swap(a, b);
      ++counts[{a, b}];
    }
  Index bad = 0;
  for (const auto& [edge, c] : counts)
    if (c > 2) ++bad;
  return bad;
}

}  // namespace shells
