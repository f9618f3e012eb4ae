#include "shells/mcmc.hpp"

#include "shells/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <tuple>

namespace shells {

namespace {

using Triangle = std::array<Index, 3>;

struct CollapseQueueEntry {
  double length;
  Index a;
  Index b;
  bool operator>(const CollapseQueueEntry& o) const {
    return std::tie(length, a, b) > std::tie(o.length, o.a, o.b);
  }
};

class EdgeCollapser {
 public:
  explicit EdgeCollapser(const TriMesh& mesh)
      : positions_(mesh.vertices),
        alive_vertex_(static_cast<size_t>(mesh.num_vertices()), true),
        merged_into_(static_cast<size_t>(mesh.num_vertices()), -1),
        vertex_faces_(static_cast<size_t>(mesh.num_vertices())),
        alive_count_(mesh.num_vertices()) {
    for (Index f = 0; f < mesh.num_faces(); ++f) {
      faces_.push_back({mesh.triangles(f, 0), mesh.triangles(f, 1), mesh.triangles(f, 2)});
      alive_face_.push_back(true);
      for (int c = 0; c < 3; ++c) vertex_faces_[static_cast<size_t>(mesh.triangles(f, c))].push_back(f);
    }
    min_area_ = 1e-10 * face_areas(mesh.vertices, mesh.triangles).sum() / static_cast<double>(std::max<Index>(mesh.num_faces(), 1));
  }

  Index alive_count() const { return alive_count_; }

  /// Collapses until at most `target` vertices remain; false if it stalled.
  bool run(Index target) {
    while (alive_count_ > target) {
      rebuild_queue();
      bool progressed = false;
      while (!queue_.empty() && alive_count_ > target) {
        const CollapseQueueEntry e = queue_.top();
        queue_.pop();
        if (try_collapse(e.a, e.b)) progressed = true;
      }
      if (!progressed) return false;
    }
    return true;
  }

  Index find(Index v) const {
    while (merged_into_[static_cast<size_t>(v)] >= 0) v = merged_into_[static_cast<size_t>(v)];
    return v;
  }

  bool vertex_alive(Index v) const { return alive_vertex_[static_cast<size_t>(v)]; }

  std::vector<Triangle> alive_faces() const {
    std::vector<Triangle> out;
    for (size_t f = 0; f < faces_.size(); ++f)
      if (alive_face_[f]) out.push_back(faces_[f]);
    return out;
  }

 private:
  double edge_length(Index a, Index b) const { return (positions_.row(a) - positions_.row(b)).norm(); }

  void rebuild_queue() {
    queue_ = {};
    for (size_t f = 0; f < faces_.size(); ++f) {
      if (!alive_face_[f]) continue;
      for (int c = 0; c < 3; ++c) {
        const Index a = faces_[f][static_cast<size_t>(c)];
        const Index b = faces_[f][static_cast<size_t>((c + 1) % 3)];
        if (a < b) push_edge(a, b);
        else if (!has_face_with(b, a, f)) push_edge(b, a);  // boundary edge seen once
      }
    }
  }

  // True if an alive face other than `skip` contains both u and v.
  bool has_face_with(Index u, Index v, size_t skip) const {
    for (const Index f : vertex_faces_[static_cast<size_t>(u)]) {
      if (static_cast<size_t>(f) == skip || !alive_face_[static_cast<size_t>(f)]) continue;
      const Triangle& t = faces_[static_cast<size_t>(f)];
      if (t[0] == v || t[1] == v || t[2] == v) return true;
    }
    return false;
  }

  void push_edge(Index a, Index b) {
    if (a > b) std::swap(a, b);
    queue_.push({edge_length(a, b), a, b});
  }

  std::vector<Index> neighbors(Index v) const {
    std::vector<Index> out;
    for (const Index f : vertex_faces_[static_cast<size_t>(v)]) {
      if (!alive_face_[static_cast<size_t>(f)]) continue;
      for (const Index w : faces_[static_cast<size_t>(f)])
        if (w != v) out.push_back(w);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  Eigen::Vector3d face_normal(const Triangle& t) const {
    const Eigen::Vector3d p0 = positions_.row(t[0]).transpose();
    const Eigen::Vector3d p1 = positions_.row(t[1]).transpose();
    const Eigen::Vector3d p2 = positions_.row(t[2]).transpose();
    return (p1 - p0).cross(p2 - p0);
  }

  bool try_collapse(Index keep, Index drop) {
    if (!vertex_alive(keep) || !vertex_alive(drop)) return false;
    if (alive_count_ <= 4) return false;

    std::vector<Index> shared_faces;
    std::vector<Index> opposite;
    for (const Index f : vertex_faces_[static_cast<size_t>(drop)]) {
      if (!alive_face_[static_cast<size_t>(f)]) continue;
      const Triangle& t = faces_[static_cast<size_t>(f)];
      if (t[0] == keep || t[1] == keep || t[2] == keep) {
        shared_faces.push_back(f);
        for (const Index w : t)
          if (w != keep && w != drop) opposite.push_back(w);
      }
    }
    if (shared_faces.empty() || shared_faces.size() > 2) return false;  // stale or non-manifold edge

    // Link condition: the one-rings may only share the opposite vertices.
    const std::vector<Index> nk = neighbors(keep);
    const std::vector<Index> nd = neighbors(drop);
    std::vector<Index> common;
    std::set_intersection(nk.begin(), nk.end(), nd.begin(), nd.end(), std::back_inserter(common));
    std::sort(opposite.begin(), opposite.end());
    if (common != opposite) return false;

    // Faces that move with `drop` must neither flip nor degenerate.
    for (const Index f : vertex_faces_[static_cast<size_t>(drop)]) {
      if (!alive_face_[static_cast<size_t>(f)]) continue;
      if (std::find(shared_faces.begin(), shared_faces.end(), f) != shared_faces.end()) continue;
      Triangle moved = faces_[static_cast<size_t>(f)];
      for (Index& w : moved)
        if (w == drop) w = keep;
      const Eigen::Vector3d before = face_normal(faces_[static_cast<size_t>(f)]);
      const Eigen::Vector3d after = face_normal(moved);
      if (0.5 * after.norm() <= min_area_) return false;
      if (after.dot(before) <= 0.0) return false;
    }

    for (const Index f : shared_faces) alive_face_[static_cast<size_t>(f)] = false;
    for (const Index f : vertex_faces_[static_cast<size_t>(drop)]) {
      if (!alive_face_[static_cast<size_t>(f)]) continue;
      for (Index& w : faces_[static_cast<size_t>(f)])
        if (w == drop) w = keep;
      vertex_faces_[static_cast<size_t>(keep)].push_back(f);
    }
    vertex_faces_[static_cast<size_t>(drop)].clear();
    alive_vertex_[static_cast<size_t>(drop)] = false;
    merged_into_[static_cast<size_t>(drop)] = keep;
    --alive_count_;
    for (const Index w : nd)
      if (w != keep) push_edge(keep, w);
    return true;
  }

  Coords positions_;
  std::vector<Triangle> faces_;
  std::vector<bool> alive_face_;
  std::vector<bool> alive_vertex_;
  std::vector<Index> merged_into_;
  std::vector<std::vector<Index>> vertex_faces_;
  Index alive_count_ = 0;
  double min_area_ = 0.0;
  std::priority_queue<CollapseQueueEntry, std::vector<CollapseQueueEntry>, std::greater<>> queue_;
};

}  // namespace

Decimation decimate(const TriMesh& mesh, Index target_vertices) {
  if (target_vertices < 4) throw InvalidRange("decimation target must be at least 4 vertices");
  const Index n = mesh.num_vertices();
  Decimation out;
  if (target_vertices >= n) {
    out.mesh = mesh;
    out.kept.resize(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) out.kept[static_cast<size_t>(i)] = i;
    out.to_decimated = out.kept;
    return out;
  }

  EdgeCollapser collapser(mesh);
  out.stalled = !collapser.run(target_vertices);
  if (out.stalled)
    spdlog::warn("decimation stalled at {} vertices (target {})", collapser.alive_count(), target_vertices);

  std::vector<Index> new_index(static_cast<size_t>(n), -1);
  for (Index v = 0; v < n; ++v) {
    if (!collapser.vertex_alive(v)) continue;
    new_index[static_cast<size_t>(v)] = static_cast<Index>(out.kept.size());
    out.kept.push_back(v);
  }
  out.to_decimated.resize(static_cast<size_t>(n));
  for (Index v = 0; v < n; ++v) out.to_decimated[static_cast<size_t>(v)] = new_index[static_cast<size_t>(collapser.find(v))];

  const auto faces = collapser.alive_faces();
  Coords vertices(static_cast<Index>(out.kept.size()), 3);
  for (size_t i = 0; i < out.kept.size(); ++i) vertices.row(static_cast<Index>(i)) = mesh.vertices.row(out.kept[i]);
  Faces triangles(static_cast<Index>(faces.size()), 3);
  for (size_t f = 0; f < faces.size(); ++f)
    for (int c = 0; c < 3; ++c)
      triangles(static_cast<Index>(f), c) = static_cast<int>(new_index[static_cast<size_t>(faces[f][static_cast<size_t>(c)])]);

  TriMesh coarse = make_mesh(vertices, triangles, MeshOptions{.normalize = false});
  if (coarse.num_vertices() != static_cast<Index>(out.kept.size()))
    throw DegenerateGeometry("decimation left vertices without faces");

  const double area = coarse.surface_area();
  out.offset = (coarse.vertex_masses.transpose() * coarse.vertices) / area;
  out.scale = 1.0 / std::sqrt(area);
  out.mesh = with_vertices(coarse, (coarse.vertices.rowwise() - out.offset) * out.scale);
  return out;
}

}  // namespace shells
