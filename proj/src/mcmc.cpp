#include "shells/mcmc.hpp"

#include "shells/errors.hpp"

#include <Eigen/Geometry>
#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>
#include <random>

namespace shells {

MatchConfig surrogate_match_config(const MatchConfig& full, const SurrogateConfig& surrogate) {
  MatchConfig cfg = full;
  cfg.k_init = surrogate.k_init;
  cfg.k_max = surrogate.k_max;
  cfg.steps = surrogate.steps;
  cfg.lambda_feat = surrogate.lambda_feat;
  cfg.lambda_arap = surrogate.lambda_arap;
  cfg.inner_passes = 1;
  return cfg;
}

SurrogateOutcome surrogate_run(const PreparedPair& pair, const MatchConfig& config, const Eigen::MatrixX3d& tau) {
  SurrogateOutcome out;
  try {
    const MatchResult r = hierarchical_match(pair, config, tau);
    out.energy = r.final_energy.alignment;
    out.tau = r.tau;
    out.displacement_field = pair.source.basis.eigenvectors.leftCols(r.tau.rows()) * r.tau;
  } catch (const Error& e) {
    spdlog::debug("surrogate failed: {}", e.what());
    out.failed = true;
  }
  if (out.failed || !std::isfinite(out.energy)) {
    out.failed = true;
    out.energy = std::numeric_limits<double>::infinity();
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Eigen::MatrixX3d sample_proposal(std::uint64_t seed, Index rows, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixX3d tau(rows, 3);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < 3; ++j) tau(i, j) = scale * normal(rng);
  return tau;
}

double acceptance_probability(double e_prop, double e_best, double sigma_match_sq) {
  return std::exp(-(e_prop - e_best) / (2.0 * sigma_match_sq));
}

namespace {

Index level_rows(double k_init) { return std::max<Index>(1, static_cast<Index>(std::lround(k_init))); }

}  // namespace

McmcResult mcmc_search(const PreparedPair& surrogate_pair, const MatchConfig& surrogate_config,
                       const SurrogateConfig& settings, std::uint64_t seed, bool parallel) {
  if (settings.num_proposals < 1) throw InvalidRange("MCMC needs at least one proposal");
  const Index rows = level_rows(surrogate_config.k_init);
  McmcResult result;
  result.start_energy = surrogate_run(surrogate_pair, surrogate_config, Eigen::MatrixX3d::Zero(rows, 3)).energy;

  const Index count = settings.num_proposals;
  result.proposals.resize(static_cast<size_t>(count));
  std::vector<Coords> fields(static_cast<size_t>(count));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (Index i = 0; i < count; ++i) {
    ProposalRecord& rec = result.proposals[static_cast<size_t>(i)];
    rec.seed = derive_seed(seed, static_cast<std::uint64_t>(i) + 1);
    rec.tau = sample_proposal(rec.seed, rows, settings.proposal_scale);
    SurrogateOutcome outcome = surrogate_run(surrogate_pair, surrogate_config, rec.tau);
    rec.energy = outcome.energy;
    fields[static_cast<size_t>(i)] = std::move(outcome.displacement_field);
  }

  // Metropolis chain over the precomputed scores.
  std::mt19937_64 chain(derive_seed(seed, 0));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double e_best = result.start_energy;
  for (auto& rec : result.proposals) {
    const double alpha = acceptance_probability(rec.energy, e_best, settings.sigma_match_sq);
    const double u = uniform(chain);
    rec.accepted = rec.energy <= e_best || u < alpha;
    if (rec.accepted) e_best = rec.energy;
  }

  Index best = -1;
  for (Index i = 0; i < count; ++i) {
    const double e = result.proposals[static_cast<size_t>(i)].energy;
    if (std::isfinite(e) && (best < 0 || e < result.proposals[static_cast<size_t>(best)].energy)) best = i;
  }
  if (best < 0) throw AllSurrogatesFailed("every surrogate run failed");
  result.best_index = best;
  result.best_tau = result.proposals[static_cast<size_t>(best)].tau;
  result.best_energy = result.proposals[static_cast<size_t>(best)].energy;
  result.best_field = std::move(fields[static_cast<size_t>(best)]);
  return result;
}

std::vector<Eigen::Matrix3d> octahedral_rotations() {
  std::vector<Eigen::Matrix3d> out;
  int perm[3] = {0, 1, 2};
  do {
    for (int signs = 0; signs < 8; ++signs) {
      Eigen::Matrix3d r = Eigen::Matrix3d::Zero();
      for (int row = 0; row < 3; ++row) r(row, perm[row]) = (signs >> row) & 1 ? -1.0 : 1.0;
      if (r.determinant() > 0) out.push_back(r);
    }
  } while (std::next_permutation(perm, perm + 3));
  return out;
}

Eigen::Matrix3d random_rotation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d q;
  for (int i = 0; i < 4; ++i) q[i] = normal(rng);
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
}

RigidInit rigid_init(const PreparedPair& surrogate_pair, const MatchConfig& surrogate_config,
                     const SurrogateConfig& settings, std::uint64_t seed, bool parallel) {
  RigidInit result;
  for (const auto& r : octahedral_rotations()) result.candidates.push_back({r, 0.0});
  for (Index j = 0; j < settings.extra_random; ++j)
    result.candidates.push_back({random_rotation(derive_seed(seed, static_cast<std::uint64_t>(j) + 1)), 0.0});

  const Index rows = level_rows(surrogate_config.k_init);
  const auto count = static_cast<Index>(result.candidates.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (Index i = 0; i < count; ++i) {
    auto& cand = result.candidates[static_cast<size_t>(i)];
    cand.energy =
        surrogate_run(with_rotated_source(surrogate_pair, cand.rotation), surrogate_config, Eigen::MatrixX3d::Zero(rows, 3))
            .energy;
  }

  Index best = 0;
  for (Index i = 1; i < count; ++i) {
    const double e = result.candidates[static_cast<size_t>(i)].energy;
    const double incumbent = result.candidates[static_cast<size_t>(best)].energy;
    if (e < incumbent - 1e-12 * std::max(1.0, std::abs(incumbent))) best = i;
  }
  if (!std::isfinite(result.candidates[static_cast<size_t>(best)].energy))
    spdlog::warn("every rigid candidate failed; keeping the identity pose");
  result.best_index = best;
  result.rotation = result.candidates[static_cast<size_t>(best)].rotation;
  return result;
}

Eigen::MatrixX3d transfer_displacement(const Coords& field, const Decimation& decimation,
                                       const SpectralBasis& full_basis, Index rows) {
  const Index n = full_basis.num_vertices();
  if (static_cast<Index>(decimation.to_decimated.size()) != n)
    throw DimensionMismatch("decimation map does not match the full mesh");
  if (rows > full_basis.size()) throw KTooLarge("not enough eigenpairs to hold the transferred displacement");
  Coords full = Coords::Zero(n, 3);
  if (field.rows() > 0)
    for (Index v = 0; v < n; ++v) full.row(v) = field.row(decimation.to_decimated[static_cast<size_t>(v)]) / decimation.scale;
  return full_basis.eigenvectors.leftCols(rows).transpose() * (full_basis.masses.asDiagonal() * full);
}

FullMatch match_shapes(const PreparedPair& pair, const MatchOptions& options) {
  const MatchConfig& config = options.config;
  const MatchConfig surrogate_config = surrogate_match_config(config, options.surrogate);

  FullMatch out;
  const bool need_surrogate = options.rigid == RigidMode::Search || options.use_mcmc;
  Decimation source_dec;
  PreparedPair surrogate_pair;
  if (need_surrogate) {
    source_dec = decimate(pair.source.mesh, options.surrogate.vertex_budget);
    const Decimation target_dec = decimate(pair.target.mesh, options.surrogate.vertex_budget);
    surrogate_pair = prepare_pair(source_dec.mesh, target_dec.mesh, surrogate_config);
  }

  switch (options.rigid) {
    case RigidMode::Search:
      out.rigid = rigid_init(surrogate_pair, surrogate_config, options.surrogate, derive_seed(options.seed, 1),
                             options.parallel);
      break;
    case RigidMode::Random:
      out.rigid.rotation = random_rotation(derive_seed(options.seed, 3));
      out.rigid.candidates.push_back({out.rigid.rotation, 0.0});
      break;
    case RigidMode::Identity:
      out.rigid.candidates.push_back({out.rigid.rotation, 0.0});
      break;
  }

  const PreparedPair full_pair = with_rotated_source(pair, out.rigid.rotation);
  const Index rows = level_rows(config.k_init);
  out.init_tau = Eigen::MatrixX3d::Zero(rows, 3);
  if (options.use_mcmc) {
    out.mcmc = mcmc_search(with_rotated_source(surrogate_pair, out.rigid.rotation), surrogate_config, options.surrogate,
                           derive_seed(options.seed, 2), options.parallel);
    out.init_tau = transfer_displacement(out.mcmc.best_field, source_dec, full_pair.source.basis,
                                         std::min(rows, full_pair.source.basis.size()));
  }
  out.match = hierarchical_match(full_pair, config, out.init_tau);
  return out;
}

FullMatch match_shapes(const TriMesh& source, const TriMesh& target, const MatchOptions& options) {
  return match_shapes(prepare_pair(source, target, options.config), options);
}

}  // namespace shells
