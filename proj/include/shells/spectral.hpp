#pragma once

#include "shells/mesh.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace shells {

struct EigenOptions {
  // Dense solve when N <= dense_threshold, or when more than a quarter of
  // the spectrum is requested (Krylov methods lose to dense there).
  Index dense_threshold = 1500;
  double tolerance = 1e-10;
  int max_iterations = 300;
  std::uint64_t seed = 0;
  bool force_sparse = false;
};

/// Leading generalized eigenpairs of (stiffness, masses), mass-orthonormal,
/// ascending. Column k holds phi_{k+1}.
struct SpectralBasis {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd masses;

  Index size() const { return eigenvalues.size(); }
  Index num_vertices() const { return eigenvectors.rows(); }
};

/// Smallest k_total eigenpairs. Signs: the first eigenvector has a positive
/// mass-weighted sum; every other one has its largest-magnitude entry
/// positive (lowest index on ties).
SpectralBasis compute_basis(const TriMesh& mesh, Index k_total, const EigenOptions& options = {});

/// Solvers behind compute_basis, exposed for testing.
SpectralBasis solve_pencil_dense(const SparseMatrix& stiffness, const Eigen::VectorXd& masses, Index k);
SpectralBasis solve_pencil_lanczos(const SparseMatrix& stiffness, const Eigen::VectorXd& masses, Index k,
                                   const EigenOptions& options);
void fix_signs(SpectralBasis& basis);

/// Projection coefficients Phi^T M f for every column of f (all K_total modes).
Eigen::MatrixXd spectral_coefficients(const SpectralBasis& basis, const Eigen::MatrixXd& f);

/// Mass-weighted L2 norm of a (possibly multi-column) function.
double mass_norm(const Eigen::VectorXd& masses, const Eigen::MatrixXd& f);

/// Hard truncation T_K = Phi_K Phi_K^T M X.
Coords spectral_reconstruct(const SpectralBasis& basis, const Coords& x, Index k);

enum class LevelKind { Sigmoid, Indicator };

/// Per-eigenfunction weights of one smoothing level. Sigmoid levels use
/// s_k = 1 / (1 + exp(sigma (k - K))) with k 1-based; indicator levels use
/// 1{k <= K}.
struct ShellLevel {
  double k = 0.0;
  double sigma = 0.5;
  LevelKind kind = LevelKind::Sigmoid;
  Eigen::VectorXd weights;

  /// Number of eigenfunctions used by the spectral and displacement blocks
  /// at this level: round(K) clamped to [1, K_total].
  Index width() const;
};

ShellLevel make_shell_level(double k, double sigma, Index k_total);
ShellLevel make_indicator_level(double k, Index k_total);

/// X_K = sum_k s_k phi_k phi_k^T M X, truncated at the basis size.
Coords smooth_shell(const SpectralBasis& basis, const Coords& x, const ShellLevel& level);

/// Same operator applied to precomputed coefficients Phi^T M X.
Coords smooth_from_coefficients(const SpectralBasis& basis, const Eigen::MatrixXd& coefficients,
                                const ShellLevel& level);

/// |1 - exp(-sigma)|.
double transition_bound(double sigma);

/// ||S_{K+1}(X) - S_K(X)||_M / ||S_{K+1}(X)||_M for K = k_first..k_last.
/// Requires k_last <= K_total - 7/sigma so the truncated tail is negligible.
std::vector<double> verify_transition_bound(const SpectralBasis& basis, const Coords& x, double sigma,
                                            Index k_first, Index k_last);

/// The hard-truncation counterpart ||T_{K+1} - T_K||_M / ||T_{K+1}||_M.
std::vector<double> spectral_transition_ratios(const SpectralBasis& basis, const Coords& x, Index k_first,
                                               Index k_last);

/// 64-bit FNV-1a over vertex and face buffers.
std::uint64_t mesh_hash(const TriMesh& mesh);

/// Binary cache: magic, mesh hash, sizes, eigenvalues, eigenvectors, masses.
void save_basis(const std::filesystem::path& path, const SpectralBasis& basis, std::uint64_t hash);

/// Empty when the file is missing, unreadable, or was written for another mesh.
std::optional<SpectralBasis> load_basis(const std::filesystem::path& path, std::uint64_t hash);

/// compute_basis with an on-disk cache in `cache_dir` (no caching if empty).
SpectralBasis cached_basis(const TriMesh& mesh, Index k_total, const EigenOptions& options,
                           const std::filesystem::path& cache_dir);

}  // namespace shells
