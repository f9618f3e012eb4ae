#pragma once

#include "shells/descriptors.hpp"
#include "shells/embedding.hpp"

#include <Eigen/Dense>

#include <vector>

namespace shells {

// ---------------------------------------------------------------------------
// Point map step

/// For every target row m, the index of the nearest source row in the
/// Euclidean metric; ties go to the lowest source index. Distances come from
/// a blocked product and are re-checked exactly near the minimum.
PointMap solve_point_map(const ProductEmbedding& source, const ProductEmbedding& target);
PointMap nearest_rows(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target);

/// ||P source - target||_F^2 for the given assignments.
double alignment_energy(const ProductEmbedding& source, const ProductEmbedding& target, const PointMap& map);

// ---------------------------------------------------------------------------
// Functional map step

struct FunctionalMap {
  Eigen::MatrixXd c;
  bool orthogonal = true;

  Index size() const { return c.rows(); }
};

/// Spectral coefficients of the descriptor functions truncated to k modes:
/// source_coeffs = Phi_K^T M F, target_coeffs = Psi_K^T M G.
struct FeatureTerm {
  Eigen::MatrixXd source_coeffs;
  Eigen::MatrixXd target_coeffs;
};

FeatureTerm make_feature_term(const SpectralBasis& source_basis, const DescriptorField& source_features,
                              const SpectralBasis& target_basis, const DescriptorField& target_features, Index k);

/// ||C Phi^+ F - Psi^+ G||_F^2.
double feature_energy(const Eigen::MatrixXd& c, const FeatureTerm& features);

/// Orthogonal C minimizing
///   ||P source_spectral C^T - target_spectral||_F^2 + lambda_feat ||C A_F - B_F||_F^2
/// in closed form (C = U V^T from the SVD of the cross-covariance).
/// `source_spectral` and `target_spectral` are the (weighted) spectral blocks
/// before the map is applied. Pass nullptr or lambda_feat = 0 to drop the
/// feature term; an empty map drops the alignment term.
FunctionalMap solve_functional_map(const Eigen::MatrixXd& source_spectral, const Eigen::MatrixXd& target_spectral,
                                   const PointMap& map, const FeatureTerm* features, double lambda_feat);

/// Pads an orthogonal map with an identity block up to `k`, or truncates it.
Eigen::MatrixXd resize_functional_map(const Eigen::MatrixXd& c, Index k);

// ---------------------------------------------------------------------------
// Deformation step

struct Displacement {
  Eigen::MatrixX3d tau;

  Index size() const { return tau.rows(); }
};

/// Zero-padded or truncated copy with `k` rows.
Displacement resize_displacement(const Displacement& d, Index k);

/// One-ring structure and clamped cotangent weights of a mesh.
class ArapModel {
 public:
  explicit ArapModel(const TriMesh& mesh);

  struct Edge {
    Index from;
    Index to;
    double weight;
  };

  Index num_vertices() const { return num_vertices_; }
  /// Directed one-ring pairs (x, y), each undirected edge listed twice.
  const std::vector<Edge>& edges() const { return edges_; }
  /// Offsets into edges() per source vertex x.
  const std::vector<Index>& offsets() const { return offsets_; }
  /// sum over undirected edges w (e_x - e_y)(e_x - e_y)^T.
  const SparseMatrix& laplacian() const { return laplacian_; }

  /// Phi^T L Phi.
  Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& phi) const;

 private:
  Index num_vertices_ = 0;
  std::vector<Edge> edges_;
  std::vector<Index> offsets_;
  SparseMatrix laplacian_;
};

/// Local rotations R(x), one per vertex.
struct ArapState {
  std::vector<Eigen::Matrix3d> rotations;
};

ArapState identity_rotations(Index n);

/// Local step: per-vertex SVD Procrustes on weighted one-ring edge vectors,
/// reflection-corrected so det R = +1.
ArapState fit_rotations(const ArapModel& model, const Coords& rest, const Coords& deformed);

/// sum_x sum_{y in N(x)} w_xy ||R(x)(X(x)-X(y)) - (X*(x)-X*(y))||^2.
double arap_energy(const ArapModel& model, const Coords& rest, const Coords& deformed, const ArapState& state);

/// Inputs of the displacement subproblem
///   w_xyz^2 ||P (X_K + Phi_K tau) - Y_K||_F^2 + lambda_arap E_arap(tau).
/// `phi` is the N x K block of source eigenfunctions; `arap_gram` is
/// Phi_K^T L Phi_K (computed from the model when empty).
struct DisplacementProblem {
  const ArapModel* model = nullptr;
  Eigen::MatrixXd phi;
  Coords rest;    // X_K, unweighted
  Coords target;  // Y_K, unweighted, one row per target vertex
  PointMap map;   // target -> source
  double xyz_weight = 1.0;
  double lambda_arap = 0.0;
  Eigen::MatrixXd arap_gram;
  int max_iterations = 10;
  double tolerance = 1e-5;
};

/// Objective with the rotations held fixed.
double displacement_objective(const DisplacementProblem& problem, const Eigen::MatrixX3d& tau, const ArapState& state);

/// Analytic gradient of displacement_objective in tau (rotations fixed).
Eigen::MatrixX3d displacement_gradient(const DisplacementProblem& problem, const Eigen::MatrixX3d& tau,
                                       const ArapState& state);

struct DisplacementResult {
  Displacement displacement;
  ArapState rotations;
  std::vector<double> energies;  // objective after each local step
};

/// Local-global alternation: global least-squares solve in tau with the
/// rotations fixed, then per-vertex rotation fits. Stops when the relative
/// decrease drops below the tolerance or after max_iterations.
DisplacementResult solve_displacement(const DisplacementProblem& problem, const Displacement& init);

// ---------------------------------------------------------------------------
// Total energy

struct EnergyTerms {
  double alignment = 0.0;
  double feature = 0.0;
  double arap = 0.0;
  double total = 0.0;
};

/// alignment + lambda_feat E_feat(C) + lambda_arap E_arap(tau). Pass a null
/// feature term or ARAP model to leave that component at zero.
EnergyTerms total_energy(const ProductEmbedding& source_morphed, const ProductEmbedding& target, const PointMap& map,
                         const Eigen::MatrixXd& c, const FeatureTerm* features, double lambda_feat,
                         const ArapModel* model, const Coords& rest, const Coords& deformed, double lambda_arap);

}  // namespace shells
