#pragma once

#include "shells/alignment.hpp"
#include "shells/descriptors.hpp"
#include "shells/embedding.hpp"
#include "shells/spectral.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

namespace shells {

struct MatchConfig {
  double k_init = 6.0;
  double k_max = 500.0;
  Index steps = 50;
  double sigma = 0.5;
  LevelKind level_kind = LevelKind::Sigmoid;
  ChannelWeights weights;
  double lambda_feat = 1.0;
  double lambda_arap = 10.0;
  // Include the descriptor term at every level; off keeps it out entirely.
  bool use_features = true;
  Index hks_times = 16;
  // (P, C, tau) sweeps per level.
  int inner_passes = 1;
  int arap_iterations = 10;
  double arap_tolerance = 1e-5;
  EigenOptions eigen;
  std::filesystem::path cache_dir;
};

/// Number of eigenpairs needed for a schedule ending at k_max with
/// steepness sigma: ceil(k_max + 7/sigma), capped at N - 1.
Index required_basis_size(double k_max, double sigma, Index num_vertices);

struct Schedule {
  std::vector<double> levels;

  Index size() const { return static_cast<Index>(levels.size()); }
};

/// K_i = k_init (k_max/k_init)^(i/(steps-1)), i = 0..steps-1.
Schedule make_schedule(double k_init = 6.0, double k_max = 500.0, Index steps = 50);

/// A mesh with its basis and the projection coefficients of its coordinates.
struct PreparedShape {
  TriMesh mesh;
  SpectralBasis basis;
  Eigen::MatrixXd coefficients;  // Phi^T M X, K_total x 3
};

PreparedShape prepare_shape(TriMesh mesh, Index k_total, const EigenOptions& options = {},
                            const std::filesystem::path& cache_dir = {});

/// The shape rotated by `rotation` (x -> R x). The basis is intrinsic and
/// carries over unchanged.
PreparedShape rotated(const PreparedShape& shape, const Eigen::Matrix3d& rotation);

/// Everything hierarchical_match needs about a pair, computed once.
struct PreparedPair {
  PreparedShape source;
  PreparedShape target;
  DescriptorField source_features;
  DescriptorField target_features;
  std::shared_ptr<const ArapModel> source_arap;

  Index basis_size() const { return std::min(source.basis.size(), target.basis.size()); }
};

/// Bases sized for the config's schedule and HKS descriptors sampled at the
/// source's diffusion times on both shapes.
PreparedPair prepare_pair(TriMesh source, TriMesh target, const MatchConfig& config);
PreparedPair prepare_pair(PreparedShape source, PreparedShape target, const MatchConfig& config);

/// Same pair with the source rotated.
PreparedPair with_rotated_source(const PreparedPair& pair, const Eigen::Matrix3d& rotation);

/// Energies recorded at one level of the schedule.
struct LevelRecord {
  double k = 0.0;
  Index width = 0;
  // Total energy after the point map step and after the functional map step.
  double after_point_map = 0.0;
  double after_functional_map = 0.0;
  // Energy after the displacement step.
  EnergyTerms energy;
};

struct MatchResult {
  PointMap point_map;    // target -> source
  PointMap reverse_map;  // source -> target
  Coords deformed_source;
  Eigen::MatrixXd functional_map;
  Eigen::MatrixX3d tau;
  std::vector<LevelRecord> trace;
  EnergyTerms final_energy;
  // Final source and target embeddings, for surrogate scoring and colors.
  ProductEmbedding source_embedding;
  ProductEmbedding target_embedding;
};

/// Coarse-to-fine alignment over the schedule. `init_tau` is zero-padded or
/// truncated to the first level's width. Without `init_c` the first
/// functional map is estimated from an extrinsic nearest-neighbor pass.
MatchResult hierarchical_match(const PreparedPair& pair, const MatchConfig& config,
                               const Eigen::MatrixX3d& init_tau = Eigen::MatrixX3d(),
                               const std::optional<Eigen::MatrixXd>& init_c = std::nullopt);

/// A -> T -> B by index chaining of A's reverse map and B's point map.
PointMap chain_via_template(const MatchResult& a_to_template, const MatchResult& b_to_template);

}  // namespace shells
