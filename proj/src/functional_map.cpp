#include "shells/alignment.hpp"

#include "shells/errors.hpp"

#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include <string>

namespace shells {

FeatureTerm make_feature_term(const SpectralBasis& source_basis, const DescriptorField& source_features,
                              const SpectralBasis& target_basis, const DescriptorField& target_features, Index k) {
  if (source_features.dims() != target_features.dims())
    throw DimensionMismatch("descriptor dimensions differ: " + std::to_string(source_features.dims()) + " vs " +
                            std::to_string(target_features.dims()));
  if (k > source_basis.size() || k > target_basis.size()) throw KTooLarge("feature term needs more eigenpairs");
  if (source_features.values.rows() != source_basis.num_vertices() ||
      target_features.values.rows() != target_basis.num_vertices())
    throw DimensionMismatch("descriptor rows do not match the mesh");
  FeatureTerm term;
  term.source_coeffs = source_basis.eigenvectors.leftCols(k).transpose() *
                       (source_basis.masses.asDiagonal() * source_features.values);
  term.target_coeffs = target_basis.eigenvectors.leftCols(k).transpose() *
                       (target_basis.masses.asDiagonal() * target_features.values);
  return term;
}

namespace {

// Leading k x D block of coefficients, for levels smaller than the term.
Eigen::MatrixXd leading(const Eigen::MatrixXd& coeffs, Index k) {
  if (k > coeffs.rows()) throw DimensionMismatch("feature term has fewer modes than the map");
  return coeffs.topRows(k);
}

}  // namespace

double feature_energy(const Eigen::MatrixXd& c, const FeatureTerm& features) {
  const Index k = c.rows();
  return (c * leading(features.source_coeffs, k) - leading(features.target_coeffs, k)).squaredNorm();
}

FunctionalMap solve_functional_map(const Eigen::MatrixXd& source_spectral, const Eigen::MatrixXd& target_spectral,
                                   const PointMap& map, const FeatureTerm* features, double lambda_feat) {
  const Index k = source_spectral.cols();
  if (target_spectral.cols() != k)
    throw DimensionMismatch("spectral blocks have " + std::to_string(k) + " and " +
                            std::to_string(target_spectral.cols()) + " columns");

  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(k, k);
  if (map.size() > 0) {
    if (map.size() != target_spectral.rows()) throw DimensionMismatch("point map does not cover the target");
    Eigen::MatrixXd pulled(map.size(), k);
    for (Index m = 0; m < map.size(); ++m) pulled.row(m) = source_spectral.row(map.assignments[static_cast<size_t>(m)]);
    cross.noalias() += target_spectral.transpose() * pulled;
  }
  if (features != nullptr && lambda_feat > 0.0)
    cross.noalias() += lambda_feat * leading(features->target_coeffs, k) * leading(features->source_coeffs, k).transpose();

  FunctionalMap out;
  if (cross.squaredNorm() == 0.0) {
    out.c = Eigen::MatrixXd::Identity(k, k);
    return out;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv[k - 1] <= 1e-12 * sv[0])
    spdlog::debug("functional map: cross-covariance is rank deficient (smallest singular value {:.3g})", sv[k - 1]);
  out.c = svd.matrixU() * svd.matrixV().transpose();
  return out;
}

Eigen::MatrixXd resize_functional_map(const Eigen::MatrixXd& c, Index k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(k, k);
  const Index keep = std::min(k, c.rows());
  out.topLeftCorner(keep, keep) = c.topLeftCorner(keep, keep);
  return out;
}

}  // namespace shells
