#pragma once

#include "shells/spectral.hpp"

namespace shells {

/// Relative scaling of the spectral, Cartesian and normal channels. With
/// damp_spectral, spectral coordinate k is further scaled by
/// 1/sqrt(1 + lambda_k).
struct ChannelWeights {
  double spectral = 1.0;
  double xyz = 1.0;
  double normal = 1.0;
  bool damp_spectral = true;
};

/// Per-vertex coordinates in the (K+6)-dimensional product space. Blocks are
/// stored with their channel weights applied.
struct ProductEmbedding {
  Eigen::MatrixXd spectral;
  Coords coords;
  Coords normals;
  ChannelWeights weights;

  Index num_points() const { return coords.rows(); }
  Index width() const { return spectral.cols() + 6; }
  Eigen::MatrixXd stacked() const;
};

/// Column scaling applied to the first k eigenfunctions.
Eigen::VectorXd spectral_damping(const SpectralBasis& basis, Index k, bool damp);

/// (w_spec Psi_K, w_xyz Y_K, w_n n(Y_K)), normals recomputed from the
/// smoothed vertex positions on the original connectivity.
ProductEmbedding embed_target(const TriMesh& mesh, const SpectralBasis& basis, const ShellLevel& level,
                              const ChannelWeights& weights);

/// (w_spec Phi_K C^+, w_xyz (X_K + Phi_K tau), w_n n(X_K + Phi_K tau)).
/// C^+ is C^T when C is orthogonal, the pseudo-inverse otherwise.
ProductEmbedding embed_source_morphed(const TriMesh& mesh, const SpectralBasis& basis, const ShellLevel& level,
                                      const Eigen::MatrixXd& c, const Eigen::MatrixX3d& tau,
                                      const ChannelWeights& weights);

/// Core builder shared by both: `smoothed` is the already smoothed geometry
/// X_K, `c` and `tau` may be null (identity map, no displacement).
ProductEmbedding build_embedding(const Faces& triangles, const SpectralBasis& basis, Index width,
                                 const Coords& smoothed, const Eigen::MatrixXd* c, const Eigen::MatrixX3d* tau,
                                 const ChannelWeights& weights);

/// First three spectral dimensions rescaled to [0, 1], for PLY colors.
Coords embedding_colors(const ProductEmbedding& embedding);

}  // namespace shells
