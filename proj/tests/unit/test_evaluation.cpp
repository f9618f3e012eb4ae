#include "doctest.h"

#include "shapes.hpp"
#include "temp_dir.hpp"

#include "shells/errors.hpp"
#include "shells/evaluation.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <algorithm>
#include <random>
#include <string>

using namespace shells;
using namespace shells::testing;

namespace {

Index count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  Index n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

Coords similarity(const Coords& x, double scale, const Eigen::Matrix3d& r, const Eigen::RowVector3d& t) {
  return ((scale * x) * r.transpose()).rowwise() + t;
}

}  // namespace

TEST_CASE("geodesic error of the ground truth is zero") {
  const TriMesh m = to_mesh(icosphere(2));
  const PointMap id = identity_map(m.num_vertices());
  for (const double e : geodesic_error(id, id, m)) CHECK(e == 0.0);
  CHECK(mean_error(geodesic_error(id, id, m)) == 0.0);
}

TEST_CASE("one-ring offsets cost one edge length") {
  const TriMesh m = to_mesh(icosphere(2));
  const EdgeGraph g = build_edge_graph(m.vertices, m.triangles);
  PointMap pred = identity_map(m.num_vertices());
  for (Index v = 0; v < m.num_vertices(); ++v) pred.assignments[static_cast<size_t>(v)] = g.neighbors_of(v)[0];
  const auto errors = geodesic_error(pred, identity_map(m.num_vertices()), m);
  for (Index v = 0; v < m.num_vertices(); ++v) {
    const double edge = (m.vertices.row(v) - m.vertices.row(g.neighbors_of(v)[0])).norm();
    CHECK(errors[static_cast<size_t>(v)] == doctest::Approx(edge / std::sqrt(m.surface_area())).epsilon(1e-12));
    CHECK(errors[static_cast<size_t>(v)] > 0.0);
  }
}

TEST_CASE("geodesic error normalizes by the square root of the area") {
  const RawShape s = icosphere(2);
  const TriMesh raw = to_mesh(s, {.normalize = false});
  const TriMesh unit = to_mesh(s);
  PointMap pred = identity_map(raw.num_vertices());
  std::shuffle(pred.assignments.begin(), pred.assignments.end(), std::mt19937(3));
  const auto a = geodesic_error(pred, identity_map(raw.num_vertices()), raw);
  const auto b = geodesic_error(pred, identity_map(raw.num_vertices()), unit);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
}

TEST_CASE("geodesic error checks sizes") {
  const TriMesh m = to_mesh(icosphere(1));
  CHECK_THROWS_AS(geodesic_error(identity_map(5), identity_map(6), m), DimensionMismatch);
  PointMap bad = identity_map(m.num_vertices());
  bad.assignments[0] = m.num_vertices();
  bad.codomain_size = m.num_vertices() + 1;
  CHECK_THROWS_AS(geodesic_error(bad, identity_map(m.num_vertices()), m), InputError);
}

TEST_CASE("error curve is a CDF") {
  const ErrorCurve zeros = error_curve(std::vector<double>(10, 0.0), {0.0, 0.1, 0.2});
  for (const double f : zeros.fractions) CHECK(f == 1.0);
  const ErrorCurve half = error_curve({0.0, 0.1, 0.0, 0.1}, {0.05});
  CHECK(half.fractions[0] == 0.5);

  std::mt19937 rng(5);
  std::exponential_distribution<double> dist(20.0);
  std::vector<double> errors(500);
  for (auto& e : errors) e = dist(rng);
  const auto thresholds = default_thresholds(errors, 40);
  CHECK(thresholds.size() == 40);
  CHECK(thresholds.front() == 0.0);
  CHECK(thresholds.back() == *std::max_element(errors.begin(), errors.end()));
  const ErrorCurve curve = error_curve(errors, thresholds);
  for (size_t i = 0; i < curve.fractions.size(); ++i) {
    CHECK(curve.fractions[i] >= 0.0);
    CHECK(curve.fractions[i] <= 1.0);
    if (i > 0) CHECK(curve.fractions[i] >= curve.fractions[i - 1]);
  }
  CHECK(curve.fractions.back() == 1.0);
}

TEST_CASE("conformal distortion closed forms") {
  const TriMesh sphere = to_mesh(icosphere(2));
  const DistortionReport id = conformal_distortion(sphere.vertices, sphere.triangles, sphere.vertices);
  for (const double d : id.per_triangle) CHECK(std::abs(d) < 1e-12);
  const DistortionReport scaled = conformal_distortion(sphere.vertices, sphere.triangles, 3.0 * sphere.vertices);
  for (const double d : scaled.per_triangle) CHECK(std::abs(d) < 1e-9);

  const RawShape flat = grid(6, 5);
  Coords stretched = flat.vertices;
  stretched.col(0) *= 2.0;
  const DistortionReport aniso = conformal_distortion(flat.vertices, flat.triangles, stretched);
  for (const double d : aniso.per_triangle) CHECK(d == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(aniso.mean == doctest::Approx(0.5));
}

TEST_CASE("distortion is invariant under similarities") {
  const TriMesh m = to_mesh(humanoid(2));
  std::mt19937 rng(7);
  std::normal_distribution<double> noise(0.0, 0.01);
  Coords warped = m.vertices;
  for (Index i = 0; i < warped.size(); ++i) warped.data()[i] += noise(rng);
  const DistortionReport base = conformal_distortion(m.vertices, m.triangles, warped);
  const Coords moved = similarity(warped, 2.7, axis_rotation(Eigen::Vector3d(1, -1, 2), 1.1), {0.3, 0.0, -4.0});
  const DistortionReport other = conformal_distortion(m.vertices, m.triangles, moved);
  for (size_t t = 0; t < base.per_triangle.size(); ++t)
    CHECK(std::abs(base.per_triangle[t] - other.per_triangle[t]) <= 1e-9);
  for (const double d : base.per_triangle) CHECK(d >= 0.0);
}

TEST_CASE("collapsed triangles score infinity and are capped") {
  const RawShape flat = grid(2, 2);
  Coords mapped = flat.vertices;
  mapped.row(4) = mapped.row(0);  // centre vertex folds onto a corner
  const DistortionReport r = conformal_distortion(flat.vertices, flat.triangles, mapped, 10.0, 5);
  bool any_inf = false;
  for (const double d : r.per_triangle) any_inf = any_inf || std::isinf(d);
  CHECK(any_inf);
  CHECK(std::isfinite(r.mean));
  CHECK(r.mean <= 10.0);
  Index total = 0;
  for (const Index c : r.histogram) total += c;
  CHECK(total == flat.triangles.rows());
  CHECK(r.bin_edges.size() == 6);
}

TEST_CASE("snapped coordinates follow the map") {
  Coords t(3, 3);
  t << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  PointMap m;
  m.assignments = {2, 2, 0, 1};
  m.codomain_size = 3;
  const Coords s = snapped_coordinates(m, t);
  CHECK(s.rows() == 4);
  CHECK(s.row(0) == t.row(2));
  CHECK(s.row(3) == t.row(1));
}

TEST_CASE("CSV outputs") {
  TempDir dir;
  const std::vector<double> errors = {0.0, 0.1, 0.2};
  write_errors_csv(dir / "e.csv", errors);
  CHECK(count_lines(dir / "e.csv") == 4);
  const ErrorCurve curve = error_curve(errors, default_thresholds(errors, 7));
  write_curve_csv(dir / "c.csv", curve, "ours");
  CHECK(count_lines(dir / "c.csv") == 8);
  const RawShape flat = grid(2, 2);
  write_distortion_csv(dir / "d.csv", conformal_distortion(flat.vertices, flat.triangles, flat.vertices, 10.0, 4));
  CHECK(count_lines(dir / "d.csv") == 5);
}

TEST_CASE("ablation switches") {
  for (const Ablation a : all_ablations()) CHECK(parse_ablation(ablation_name(a)) == a);
  CHECK(parse_ablation("full") == Ablation::Full);
  CHECK_THROWS_AS(parse_ablation("no_such_switch"), ConfigError);
  const MatchOptions base;
  CHECK(apply_ablation(base, Ablation::NoFeatures).config.lambda_feat == 0.0);
  CHECK(apply_ablation(base, Ablation::NoArap).config.lambda_arap == 0.0);
  const auto extr = apply_ablation(base, Ablation::ExtrinsicOnly).config.weights;
  CHECK((extr.spectral == 0.0 && extr.xyz == 1.0 && extr.normal == 1.0));
  const auto intr = apply_ablation(base, Ablation::IntrinsicOnly).config.weights;
  CHECK((intr.spectral == 1.0 && intr.xyz == 0.0 && intr.normal == 0.0));
  CHECK(apply_ablation(base, Ablation::NoNormals).config.weights.normal == 0.0);
  CHECK_FALSE(apply_ablation(base, Ablation::NoMcmc).use_mcmc);
  CHECK(apply_ablation(base, Ablation::RandomRigid).rigid == RigidMode::Random);
  CHECK(apply_ablation(base, Ablation::SpectralReconstruction).config.level_kind == LevelKind::Indicator);
}

TEST_CASE("ablation table has one row per switch plus the full method") {
  RawShape raw = humanoid(2);
  const TriMesh source = to_mesh(raw);
  const TriMesh target = make_mesh(bend(raw.vertices, 0.0, 0.7, 0.5), raw.triangles);
  MatchOptions base;
  base.config.k_max = 40;
  base.config.steps = 8;
  base.surrogate.num_proposals = 4;
  base.surrogate.extra_random = 0;
  const std::vector<AblationPair> pairs = {{"blob", source, target, identity_map(source.num_vertices())}};
  const std::vector<Ablation> switches = {Ablation::NoArap, Ablation::NoMcmc};
  const auto rows = run_ablation(pairs, base, switches);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].ablation == Ablation::Full);
  CHECK(rows[0].pair_failed[0] == false);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.mean_error));
    CHECK(r.mean_error >= 0.0);
  }
  const auto again = run_ablation(pairs, base, switches);
  for (size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].pair_errors == again[i].pair_errors);
  TempDir dir;
  write_ablation_csv(dir / "a.csv", rows);
  CHECK(count_lines(dir / "a.csv") == 4);
}

TEST_CASE("hard truncation is no better than shells on the bent capsule") {
  const RawShape cap = capsule(32, 30, 4, 3.0, 0.5);
  const std::vector<AblationPair> pairs = {{"capsule", to_mesh(cap),
                                            make_mesh(bend(cap.vertices, -0.5, 1.0, M_PI / 3), cap.triangles),
                                            identity_map(cap.vertices.rows())}};
  const auto rows = run_ablation(pairs, MatchOptions{}, {Ablation::SpectralReconstruction});
  REQUIRE(rows.size() == 2);
  CHECK(std::isfinite(rows[1].mean_error));
  CHECK(rows[1].mean_error >= rows[0].mean_error);
}
