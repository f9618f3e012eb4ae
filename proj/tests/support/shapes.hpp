#pragma once

#include "shells/mesh.hpp"

#include <Eigen/Dense>

namespace shells::testing {

struct RawShape {
  Coords vertices;
  Faces triangles;
};

/// Unit icosphere; level 3 has 642 vertices, level 4 has 2562.
RawShape icosphere(int level, double radius = 1.0);

RawShape tetrahedron();

/// Flat [0,1]^2 grid with nx * ny cells, two triangles per cell.
RawShape grid(int nx, int ny);

/// Torus with major radius R and minor radius r.
RawShape torus(int n_major, int n_minor, double major_radius, double minor_radius);

/// Closed capsule along z: a tube of `rings` rings with `around` vertices
/// each, closed by hemispherical caps. The cross-section radius is
/// r0 (1 + 0.2 cos t + 0.1 sin 2t), which has no mirror or rotational
/// symmetry.
RawShape capsule(int around, int rings, int cap_rings, double length, double radius);

/// Bends everything above z = z_start around an axis parallel to y so the
/// segment [z_start, z_end] turns by `angle` radians; points beyond z_end
/// follow rigidly.
Coords bend(const Coords& vertices, double z_start, double z_end, double angle);

/// Star-shaped blob with a torso, a head and four limbs of different sizes,
/// built by pushing an icosphere outward. With `symmetric` the limbs are
/// mirror images under x -> -x.
RawShape humanoid(int level, bool symmetric = false);

/// make_mesh on a raw shape with default options.
TriMesh to_mesh(const RawShape& shape, const MeshOptions& options = {});

/// Rotation from an axis and angle.
Eigen::Matrix3d axis_rotation(const Eigen::Vector3d& axis, double angle);

}  // namespace shells::testing
