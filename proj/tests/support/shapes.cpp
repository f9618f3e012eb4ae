#include "shapes.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <map>
#include <utility>
#include <vector>

namespace shells::testing {

namespace {

RawShape from_lists(const std::vector<Eigen::Vector3d>& v, const std::vector<Eigen::Vector3i>& f) {
  RawShape s;
  s.vertices.resize(static_cast<Index>(v.size()), 3);
  for (size_t i = 0; i < v.size(); ++i) s.vertices.row(static_cast<Index>(i)) = v[i].transpose();
  s.triangles.resize(static_cast<Index>(f.size()), 3);
  for (size_t i = 0; i < f.size(); ++i) s.triangles.row(static_cast<Index>(i)) = f[i].transpose();
  return s;
}

}  // namespace

RawShape icosphere(int level, double radius) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                                    {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<Eigen::Vector3i> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      v.push_back((v[static_cast<size_t>(a)] + v[static_cast<size_t>(b)]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Eigen::Vector3i> next;
    for (const auto& tri : f) {
      const int a = mid(tri[0], tri[1]), b = mid(tri[1], tri[2]), c = mid(tri[2], tri[0]);
      next.emplace_back(tri[0], a, c);
      next.emplace_back(tri[1], b, a);
      next.emplace_back(tri[2], c, b);
      next.emplace_back(a, b, c);
    }
    f = std::move(next);
  }
  for (auto& p : v) p *= radius;
  return from_lists(v, f);
}

RawShape tetrahedron() {
  std::vector<Eigen::Vector3d> v = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  std::vector<Eigen::Vector3i> f = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return from_lists(v, f);
}

RawShape grid(int nx, int ny) {
  std::vector<Eigen::Vector3d> v;
  std::vector<Eigen::Vector3i> f;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) v.emplace_back(static_cast<double>(i) / nx, static_cast<double>(j) / ny, 0.0);
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      f.emplace_back(id(i, j), id(i + 1, j), id(i + 1, j + 1));
      f.emplace_back(id(i, j), id(i + 1, j + 1), id(i, j + 1));
    }
  return from_lists(v, f);
}

RawShape torus(int n_major, int n_minor, double major_radius, double minor_radius) {
  std::vector<Eigen::Vector3d> v;
  std::vector<Eigen::Vector3i> f;
  for (int i = 0; i < n_major; ++i) {
    const double u = 2.0 * M_PI * i / n_major;
    for (int j = 0; j < n_minor; ++j) {
      const double w = 2.0 * M_PI * j / n_minor;
      const double rr = major_radius + minor_radius * std::cos(w);
      v.emplace_back(rr * std::cos(u), rr * std::sin(u), minor_radius * std::sin(w));
    }
  }
  auto id = [&](int i, int j) { return ((i + n_major) % n_major) * n_minor + (j + n_minor) % n_minor; };
  for (int i = 0; i < n_major; ++i)
    for (int j = 0; j < n_minor; ++j) {
      f.emplace_back(id(i, j), id(i + 1, j), id(i + 1, j + 1));
      f.emplace_back(id(i, j), id(i + 1, j + 1), id(i, j + 1));
    }
  return from_lists(v, f);
}

RawShape capsule(int around, int rings, int cap_rings, double length, double radius) {
  auto profile = [&](double theta) { return radius * (1.0 + 0.2 * std::cos(theta) + 0.1 * std::sin(2.0 * theta)); };
  std::vector<Eigen::Vector3d> v;
  std::vector<Eigen::Vector3i> f;
  // Ring list from bottom to top: (height, radial scale).
  std::vector<std::pair<double, double>> ring_params;
  for (int c = cap_rings; c >= 1; --c) {
    const double phi = 0.5 * M_PI * c / (cap_rings + 1);
    ring_params.emplace_back(-0.5 * length - radius * std::sin(phi), std::cos(phi));
  }
  for (int r = 0; r < rings; ++r) ring_params.emplace_back(-0.5 * length + length * r / (rings - 1), 1.0);
  for (int c = 1; c <= cap_rings; ++c) {
    const double phi = 0.5 * M_PI * c / (cap_rings + 1);
    ring_params.emplace_back(0.5 * length + radius * std::sin(phi), std::cos(phi));
  }
  const int bottom = 0;
  v.emplace_back(0.0, 0.0, -0.5 * length - radius);
  for (const auto& [z, s] : ring_params)
    for (int k = 0; k < around; ++k) {
      const double theta = 2.0 * M_PI * k / around;
      const double r = s * profile(theta);
      v.emplace_back(r * std::cos(theta), r * std::sin(theta), z);
    }
  const int top = static_cast<int>(v.size());
  v.emplace_back(0.0, 0.0, 0.5 * length + radius);
  const int num_rings = static_cast<int>(ring_params.size());
  auto id = [&](int ring, int k) { return 1 + ring * around + (k % around); };
  for (int k = 0; k < around; ++k) f.emplace_back(bottom, id(0, k + 1), id(0, k));
  for (int r = 0; r + 1 < num_rings; ++r)
    for (int k = 0; k < around; ++k) {
      f.emplace_back(id(r, k), id(r, k + 1), id(r + 1, k + 1));
      f.emplace_back(id(r, k), id(r + 1, k + 1), id(r + 1, k));
    }
  for (int k = 0; k < around; ++k) f.emplace_back(top, id(num_rings - 1, k), id(num_rings - 1, k + 1));
  return from_lists(v, f);
}

Coords bend(const Coords& vertices, double z_start, double z_end, double angle) {
  const double curvature = angle / (z_end - z_start);
  const double radius = 1.0 / curvature;
  Coords out = vertices;
  for (Index i = 0; i < vertices.rows(); ++i) {
    const double x = vertices(i, 0), z = vertices(i, 2);
    if (z <= z_start) continue;
    const double s = std::min(z, z_end) - z_start;
    const double theta = curvature * s;
    const double arm = radius - x;
    double nx = radius - arm * std::cos(theta);
    double nz = z_start + arm * std::sin(theta);
    if (z > z_end) {
      const double d = z - z_end;
      nx += d * std::sin(theta);
      nz += d * std::cos(theta);
    }
    out(i, 0) = nx;
    out(i, 2) = nz;
  }
  return out;
}

RawShape humanoid(int level, bool symmetric) {
  struct Limb {
    Eigen::Vector3d direction;
    double amplitude;
    double width;
  };
  std::vector<Limb> limbs;
  limbs.push_back({Eigen::Vector3d(0, 0, 1), 0.45, 0.28});  // head
  if (symmetric) {
    limbs.push_back({Eigen::Vector3d(0.35, 0, -1).normalized(), 1.0, 0.2});
    limbs.push_back({Eigen::Vector3d(-0.35, 0, -1).normalized(), 1.0, 0.2});
    limbs.push_back({Eigen::Vector3d(1, 0, 0.3).normalized(), 0.85, 0.19});
    limbs.push_back({Eigen::Vector3d(-1, 0, 0.3).normalized(), 0.85, 0.19});
  } else {
    limbs.push_back({Eigen::Vector3d(0.35, 0.05, -1).normalized(), 1.05, 0.19});
    limbs.push_back({Eigen::Vector3d(-0.4, -0.05, -1).normalized(), 0.9, 0.22});
    limbs.push_back({Eigen::Vector3d(1, 0.15, 0.15).normalized(), 0.75, 0.2});
    limbs.push_back({Eigen::Vector3d(-1, 0, 0.4).normalized(), 0.95, 0.17});
  }
  RawShape s = icosphere(level);
  for (Index i = 0; i < s.vertices.rows(); ++i) {
    const Eigen::Vector3d u = s.vertices.row(i).transpose().normalized();
    double r = 1.0;
    for (const auto& limb : limbs) {
      const double angle = std::acos(std::clamp(u.dot(limb.direction), -1.0, 1.0));
      r += limb.amplitude * std::exp(-0.5 * angle * angle / (limb.width * limb.width));
    }
    const Eigen::Vector3d p = r * u;
    s.vertices.row(i) << 0.55 * p.x(), 0.35 * p.y(), 0.8 * p.z();
  }
  return s;
}

TriMesh to_mesh(const RawShape& shape, const MeshOptions& options) {
  return make_mesh(shape.vertices, shape.triangles, options);
}

Eigen::Matrix3d axis_rotation(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace shells::testing
