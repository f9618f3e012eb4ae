#include "shells/embedding.hpp"

#include "shells/errors.hpp"

#include <Eigen/QR>

#include <string>

namespace shells {

Eigen::MatrixXd ProductEmbedding::stacked() const {
  Eigen::MatrixXd out(num_points(), width());
  out << spectral, coords, normals;
  return out;
}

Eigen::VectorXd spectral_damping(const SpectralBasis& basis, Index k, bool damp) {
  if (!damp) return Eigen::VectorXd::Ones(k);
  return (1.0 + basis.eigenvalues.head(k).array()).rsqrt().matrix();
}

ProductEmbedding build_embedding(const Faces& triangles, const SpectralBasis& basis, Index width,
                                 const Coords& smoothed, const Eigen::MatrixXd* c, const Eigen::MatrixX3d* tau,
                                 const ChannelWeights& weights) {
  if (width < 1 || width > basis.size()) throw KTooLarge("embedding width exceeds the basis");
  const auto phi = basis.eigenvectors.leftCols(width);

  ProductEmbedding emb;
  emb.weights = weights;
  Eigen::MatrixXd spectral = phi * spectral_damping(basis, width, weights.damp_spectral).asDiagonal();
  if (c != nullptr) {
    if (c->rows() != width || c->cols() != width)
      throw DimensionMismatch("functional map is " + std::to_string(c->rows()) + "x" + std::to_string(c->cols()) +
                              ", level needs " + std::to_string(width));
    const double defect = (c->transpose() * *c - Eigen::MatrixXd::Identity(width, width)).norm();
    const Eigen::MatrixXd c_plus =
        defect <= 1e-8 ? Eigen::MatrixXd(c->transpose()) : Eigen::MatrixXd(c->completeOrthogonalDecomposition().pseudoInverse());
    spectral = spectral * c_plus;
  }
  emb.spectral = weights.spectral * spectral;

  Coords deformed = smoothed;
  if (tau != nullptr) {
    if (tau->rows() != width) throw DimensionMismatch("displacement has " + std::to_string(tau->rows()) + " rows, level needs " + std::to_string(width));
    deformed += phi * *tau;
  }
  emb.normals = weights.normal * vertex_normals(deformed, triangles);
  emb.coords = weights.xyz * deformed;
  return emb;
}

ProductEmbedding embed_target(const TriMesh& mesh, const SpectralBasis& basis, const ShellLevel& level,
                              const ChannelWeights& weights) {
  return build_embedding(mesh.triangles, basis, level.width(), smooth_shell(basis, mesh.vertices, level), nullptr,
                         nullptr, weights);
}

ProductEmbedding embed_source_morphed(const TriMesh& mesh, const SpectralBasis& basis, const ShellLevel& level,
                                      const Eigen::MatrixXd& c, const Eigen::MatrixX3d& tau,
                                      const ChannelWeights& weights) {
  return build_embedding(mesh.triangles, basis, level.width(), smooth_shell(basis, mesh.vertices, level), &c, &tau,
                         weights);
}

Coords embedding_colors(const ProductEmbedding& embedding) {
  Coords colors = Coords::Constant(embedding.num_points(), 3, 0.5);
  const Index dims = std::min<Index>(3, embedding.spectral.cols());
  // Skip the constant first eigenfunction when more are available.
  const Index start = embedding.spectral.cols() > 3 ? 1 : 0;
  for (Index d = 0; d < dims; ++d) {
    const auto col = embedding.spectral.col(start + d);
    const double lo = col.minCoeff(), hi = col.maxCoeff();
    if (hi > lo) colors.col(d) = ((col.array() - lo) / (hi - lo)).matrix();
  }
  return colors;
}

}  // namespace shells
