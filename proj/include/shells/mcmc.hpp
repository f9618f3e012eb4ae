#pragma once

#include "shells/pipeline.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace shells {

struct Decimation {
  TriMesh mesh;
  // Decimated vertex i sits at original vertex kept[i].
  std::vector<Index> kept;
  // Original vertex v was merged into decimated vertex to_decimated[v].
  std::vector<Index> to_decimated;
  // Decimated coordinates are (x_original - offset) * scale.
  double scale = 1.0;
  Eigen::RowVector3d offset = Eigen::RowVector3d::Zero();
  bool stalled = false;
};

/// Shortest-edge collapse onto the surviving endpoint until at most
/// `target_vertices` remain. Collapses that violate the link condition,
/// flip a face or create a sliver are skipped; when nothing more can be
/// collapsed the best effort is returned with `stalled` set. The result is
/// re-normalized to unit area.
Decimation decimate(const TriMesh& mesh, Index target_vertices);

struct SurrogateConfig {
  double k_init = 6.0;
  double k_max = 20.0;
  Index steps = 10;
  Index vertex_budget = 1000;
  Index num_proposals = 100;
  double sigma_match_sq = 0.001;
  double proposal_scale = 1.0;
  double lambda_feat = 0.0;
  double lambda_arap = 0.0;
  Index extra_random = 8;
};

/// Low-cost pipeline settings derived from the full config.
MatchConfig surrogate_match_config(const MatchConfig& full, const SurrogateConfig& surrogate);

struct SurrogateOutcome {
  double energy = 0.0;
  bool failed = false;
  Eigen::MatrixX3d tau;          // final surrogate displacement coefficients
  Coords displacement_field;     // Phi tau on the decimated source
};

/// hierarchical_match on the decimated pair from `tau`; the score is the
/// final alignment term. Solver errors give energy +infinity.
SurrogateOutcome surrogate_run(const PreparedPair& pair, const MatchConfig& config, const Eigen::MatrixX3d& tau);

struct ProposalRecord {
  Eigen::MatrixX3d tau;
  double energy = 0.0;
  bool accepted = false;
  std::uint64_t seed = 0;
};

struct McmcResult {
  std::vector<ProposalRecord> proposals;
  double start_energy = 0.0;  // tau = 0, where the chain starts
  Index best_index = 0;
  Eigen::MatrixX3d best_tau;
  double best_energy = 0.0;
  Coords best_field;  // surrogate displacement field of the best proposal
};

/// Seed for consumer `index` derived from a root seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

/// tau ~ proposal_scale * N(0, I), drawn from the proposal's own seed.
Eigen::MatrixX3d sample_proposal(std::uint64_t seed, Index rows, double scale);

/// exp(-(e_prop - e_best) / (2 sigma^2)).
double acceptance_probability(double e_prop, double e_best, double sigma_match_sq);

/// Scores every proposal with a surrogate run, folds the Metropolis chain
/// over the scores in proposal order and returns the global argmin over the
/// proposals. The tau = 0 start only seeds the chain.
/// `parallel` evaluates proposals concurrently; results are identical.
McmcResult mcmc_search(const PreparedPair& surrogate_pair, const MatchConfig& surrogate_config,
                       const SurrogateConfig& settings, std::uint64_t seed, bool parallel = true);

/// The 24 orientation-preserving signed permutation matrices, identity first.
std::vector<Eigen::Matrix3d> octahedral_rotations();

/// Uniformly distributed rotation.
Eigen::Matrix3d random_rotation(std::uint64_t seed);

struct RigidCandidate {
  Eigen::Matrix3d rotation;
  double energy = 0.0;
};

struct RigidInit {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  std::vector<RigidCandidate> candidates;
  Index best_index = 0;
};

/// Scores the octahedral group plus `extra_random` random rotations of the
/// source with tau = 0 surrogate runs; lowest energy wins, earlier
/// candidates (identity first) win ties. Both shapes are centered, so the
/// translation is zero.
RigidInit rigid_init(const PreparedPair& surrogate_pair, const MatchConfig& surrogate_config,
                     const SurrogateConfig& settings, std::uint64_t seed, bool parallel = true);

/// Carries a surrogate displacement field to the full source mesh and
/// projects it onto the first `rows` eigenfunctions of the full basis.
Eigen::MatrixX3d transfer_displacement(const Coords& field, const Decimation& decimation,
                                       const SpectralBasis& full_basis, Index rows);

enum class RigidMode { Search, Identity, Random };

struct MatchOptions {
  MatchConfig config;
  SurrogateConfig surrogate;
  RigidMode rigid = RigidMode::Search;
  bool use_mcmc = true;
  std::uint64_t seed = 0;
  bool parallel = true;
};

struct FullMatch {
  MatchResult match;
  RigidInit rigid;
  McmcResult mcmc;
  Eigen::MatrixX3d init_tau;
};

/// rigid_init, mcmc_search and hierarchical_match end to end. The
/// correspondence refers to the original vertex order; the deformed source
/// lives in the frame of the rotated source.
FullMatch match_shapes(const TriMesh& source, const TriMesh& target, const MatchOptions& options);
FullMatch match_shapes(const PreparedPair& pair, const MatchOptions& options);

}  // namespace shells
