#include "shells/evaluation.hpp"

#include "shells/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace shells {

std::vector<double> geodesic_error(const PointMap& pred, const PointMap& gt, const TriMesh& codomain_mesh) {
  if (pred.size() != gt.size())
    throw DimensionMismatch("prediction has " + std::to_string(pred.size()) + " entries, ground truth " +
                            std::to_string(gt.size()));
  const Index n = codomain_mesh.num_vertices();
  for (const PointMap* map : {&pred, &gt})
    for (const Index v : map->assignments)
      if (v < 0 || v >= n) throw IndexOutOfRange("map entry " + std::to_string(v) + " outside the mesh");

  const EdgeGraph graph = build_edge_graph(codomain_mesh.vertices, codomain_mesh.triangles);
  const double normalizer = std::sqrt(codomain_mesh.surface_area());

  // One Dijkstra per distinct ground-truth vertex.
  std::map<Index, std::vector<Index>> by_source;
  for (Index i = 0; i < gt.size(); ++i) by_source[gt.assignments[static_cast<size_t>(i)]].push_back(i);
  std::vector<std::pair<Index, std::vector<Index>>> groups(by_source.begin(), by_source.end());

  std::vector<double> errors(static_cast<size_t>(gt.size()), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (size_t g = 0; g < groups.size(); ++g) {
    const std::vector<double> dist = dijkstra(graph, groups[g].first);
    for (const Index i : groups[g].second)
      errors[static_cast<size_t>(i)] = dist[static_cast<size_t>(pred.assignments[static_cast<size_t>(i)])] / normalizer;
  }
  return errors;
}

double mean_error(const std::vector<double>& errors) {
  double sum = 0.0;
  size_t count = 0;
  for (const double e : errors) {
    if (!std::isfinite(e)) continue;
    sum += e;
    ++count;
  }
  if (count < errors.size())
    spdlog::warn("{} of {} errors are infinite (disconnected target) and were excluded", errors.size() - count,
                 errors.size());
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

ErrorCurve error_curve(const std::vector<double>& errors, const std::vector<double>& thresholds) {
  std::vector<double> sorted;
  for (const double e : errors)
    if (std::isfinite(e)) sorted.push_back(e);
  std::sort(sorted.begin(), sorted.end());
  ErrorCurve curve;
  curve.thresholds = thresholds;
  std::sort(curve.thresholds.begin(), curve.thresholds.end());
  for (const double t : curve.thresholds) {
    const auto within = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    curve.fractions.push_back(sorted.empty() ? 1.0 : static_cast<double>(within) / static_cast<double>(sorted.size()));
  }
  return curve;
}

std::vector<double> default_thresholds(const std::vector<double>& errors, Index count) {
  double max_error = 0.0;
  for (const double e : errors)
    if (std::isfinite(e)) max_error = std::max(max_error, e);
  std::vector<double> out(static_cast<size_t>(std::max<Index>(count, 2)));
  const auto last = static_cast<double>(out.size() - 1);
  for (size_t i = 0; i < out.size(); ++i) out[i] = max_error * static_cast<double>(i) / last;
  out.back() = max_error;
  return out;
}

DistortionReport conformal_distortion(const Coords& rest, const Faces& triangles, const Coords& mapped, double cap,
                                      Index bins) {
  if (rest.rows() != mapped.rows()) throw DimensionMismatch("mapped coordinates do not match the mesh");
  DistortionReport report;
  report.cap = cap;
  report.per_triangle.resize(static_cast<size_t>(triangles.rows()));
  for (Index f = 0; f < triangles.rows(); ++f) {
    const Eigen::Vector3d p0 = rest.row(triangles(f, 0)).transpose();
    const Eigen::Vector3d e1 = rest.row(triangles(f, 1)).transpose() - p0;
    const Eigen::Vector3d e2 = rest.row(triangles(f, 2)).transpose() - p0;
    const Eigen::Vector3d u = e1.normalized();
    const Eigen::Vector3d v = (e2 - e2.dot(u) * u).normalized();
    Eigen::Matrix2d local;
    local << e1.dot(u), e2.dot(u), e1.dot(v), e2.dot(v);

    const Eigen::Vector3d q0 = mapped.row(triangles(f, 0)).transpose();
    Eigen::Matrix<double, 3, 2> image;
    image.col(0) = mapped.row(triangles(f, 1)).transpose() - q0;
    image.col(1) = mapped.row(triangles(f, 2)).transpose() - q0;

    const Eigen::Matrix<double, 3, 2> jac = image * local.inverse();
    const Eigen::Matrix2d gram = jac.transpose() * jac;
    // s1^2 + s2^2 = trace, s1 s2 = sqrt(det), so s1/s2 + s2/s1 = trace / sqrt(det).
    const double det = gram.determinant();
    const double trace = gram.trace();
    double value = std::numeric_limits<double>::infinity();
    if (det > 1e-24 * trace * trace && std::isfinite(det)) value = std::max(0.0, trace / std::sqrt(det) - 2.0);
    report.per_triangle[static_cast<size_t>(f)] = value;
  }

  report.bin_edges.resize(static_cast<size_t>(bins) + 1);
  for (Index b = 0; b <= bins; ++b) report.bin_edges[static_cast<size_t>(b)] = cap * static_cast<double>(b) / static_cast<double>(bins);
  report.histogram.assign(static_cast<size_t>(bins), 0);
  double sum = 0.0;
  for (const double d : report.per_triangle) {
    const double capped = std::min(d, cap);
    sum += capped;
    const auto bin = std::min<Index>(bins - 1, static_cast<Index>(capped / cap * static_cast<double>(bins)));
    ++report.histogram[static_cast<size_t>(bin)];
  }
  report.mean = report.per_triangle.empty() ? 0.0 : sum / static_cast<double>(report.per_triangle.size());
  return report;
}

Coords snapped_coordinates(const PointMap& source_to_target, const Coords& target_vertices) {
  Coords out(source_to_target.size(), 3);
  for (Index i = 0; i < source_to_target.size(); ++i) {
    const Index t = source_to_target.assignments[static_cast<size_t>(i)];
    if (t < 0 || t >= target_vertices.rows()) throw IndexOutOfRange("map entry outside the target mesh");
    out.row(i) = target_vertices.row(t);
  }
  return out;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out.precision(10);
  return out;
}

}  // namespace

void write_errors_csv(const std::filesystem::path& path, const std::vector<double>& errors) {
  auto out = open_csv(path);
  out << "vertex,error\n";
  for (size_t i = 0; i < errors.size(); ++i) out << i << ',' << errors[i] << '\n';
}

void write_curve_csv(const std::filesystem::path& path, const ErrorCurve& curve, const std::string& label) {
  auto out = open_csv(path);
  out << "method,threshold,fraction\n";
  for (size_t i = 0; i < curve.thresholds.size(); ++i)
    out << label << ',' << curve.thresholds[i] << ',' << curve.fractions[i] << '\n';
}

void write_distortion_csv(const std::filesystem::path& path, const DistortionReport& report) {
  auto out = open_csv(path);
  out << "bin_low,bin_high,count\n";
  for (size_t b = 0; b < report.histogram.size(); ++b)
    out << report.bin_edges[b] << ',' << report.bin_edges[b + 1] << ',' << report.histogram[b] << '\n';
}

}  // namespace shells
