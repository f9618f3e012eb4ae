#include "shells/alignment.hpp"

#include "shells/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace shells {

namespace {

double exact_distance(const Eigen::MatrixXd& a, Index i, const Eigen::MatrixXd& b, Index j) {
  double sum = 0.0;
  for (Index d = 0; d < a.cols(); ++d) {
    const double diff = a(i, d) - b(j, d);
    sum += diff * diff;
  }
  return sum;
}

}  // namespace

PointMap nearest_rows(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target) {
  if (source.cols() != target.cols())
    throw DimensionMismatch("embedding widths differ: " + std::to_string(source.cols()) + " vs " +
                            std::to_string(target.cols()));
  if (source.rows() == 0) throw DimensionMismatch("source embedding is empty");

  const Index n = source.rows();
  const Index m = target.rows();
  PointMap map;
  map.assignments.assign(static_cast<size_t>(m), 0);
  map.codomain_size = n;
  map.direction = MapDirection::TargetToSource;

  const Eigen::VectorXd source_sq = source.rowwise().squaredNorm();
  const double source_scale = source_sq.maxCoeff();
  const Index block = std::clamp<Index>(4'000'000 / std::max<Index>(n, 1), 1, 512);
  const Index num_blocks = (m + block - 1) / block;

#pragma omp parallel for schedule(dynamic)
  for (Index b = 0; b < num_blocks; ++b) {
    const Index begin = b * block;
    const Index count = std::min(block, m - begin);
    const auto rows = target.middleRows(begin, count);
    // Squared distances up to the per-target constant |t|^2.
    Eigen::MatrixXd partial = (-2.0 * source) * rows.transpose();
    partial.colwise() += source_sq;
    for (Index j = 0; j < count; ++j) {
      const auto col = partial.col(j);
      const double approx_min = col.minCoeff();
      const double target_sq = rows.row(j).squaredNorm();
      const double slack = 1e-10 * (source_scale + target_sq) + std::numeric_limits<double>::min();
      Index best = -1;
      double best_dist = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < n; ++i) {
        if (col[i] > approx_min + slack) continue;
        const double d = exact_distance(source, i, target, begin + j);
        if (d < best_dist) {
          best_dist = d;
          best = i;
        }
      }
      map.assignments[static_cast<size_t>(begin + j)] = best;
    }
  }
  return map;
}

PointMap solve_point_map(const ProductEmbedding& source, const ProductEmbedding& target) {
  if (source.width() != target.width())
    throw DimensionMismatch("embedding widths differ: " + std::to_string(source.width()) + " vs " +
                            std::to_string(target.width()));
  return nearest_rows(source.stacked(), target.stacked());
}

double alignment_energy(const ProductEmbedding& source, const ProductEmbedding& target, const PointMap& map) {
  if (source.width() != target.width()) throw DimensionMismatch("embedding widths differ");
  if (map.size() != target.num_points()) throw DimensionMismatch("point map does not cover the target");
  const Eigen::MatrixXd s = source.stacked();
  const Eigen::MatrixXd t = target.stacked();
  double sum = 0.0;
  for (Index m = 0; m < t.rows(); ++m) sum += (s.row(map.assignments[static_cast<size_t>(m)]) - t.row(m)).squaredNorm();
  return sum;
}

}  // namespace shells
