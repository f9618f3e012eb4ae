#include "shells/pipeline.hpp"

#include "shells/errors.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <sstream>
#include <string>

namespace shells {

Index required_basis_size(double k_max, double sigma, Index num_vertices) {
  if (!(sigma > 0)) throw InvalidRange("sigmoid steepness must be positive");
  const auto wanted = static_cast<Index>(std::ceil(k_max + 7.0 / sigma));
  return std::max<Index>(1, std::min(wanted, num_vertices - 1));
}

Schedule make_schedule(double k_init, double k_max, Index steps) {
  if (!(k_init >= 2.0) || !(k_max > k_init))
    throw InvalidRange("schedule needs 2 <= K_init < K_max, got K_init=" + std::to_string(k_init) +
                       " K_max=" + std::to_string(k_max));
  if (steps < 2) throw InvalidRange("schedule needs at least 2 steps");
  Schedule schedule;
  schedule.levels.resize(static_cast<size_t>(steps));
  const double ratio = k_max / k_init;
  for (Index i = 0; i < steps; ++i)
    schedule.levels[static_cast<size_t>(i)] = k_init * std::pow(ratio, static_cast<double>(i) / static_cast<double>(steps - 1));
  schedule.levels.front() = k_init;
  schedule.levels.back() = k_max;
  return schedule;
}

PreparedShape prepare_shape(TriMesh mesh, Index k_total, const EigenOptions& options,
                            const std::filesystem::path& cache_dir) {
  PreparedShape shape;
  shape.basis = cached_basis(mesh, k_total, options, cache_dir);
  shape.coefficients = spectral_coefficients(shape.basis, mesh.vertices);
  shape.mesh = std::move(mesh);
  return shape;
}

PreparedShape rotated(const PreparedShape& shape, const Eigen::Matrix3d& rotation) {
  PreparedShape out = shape;
  out.mesh.vertices = shape.mesh.vertices * rotation.transpose();
  out.mesh.normals = shape.mesh.normals * rotation.transpose();
  out.coefficients = shape.coefficients * rotation.transpose();
  return out;
}

PreparedPair prepare_pair(PreparedShape source, PreparedShape target, const MatchConfig& config) {
  PreparedPair pair;
  pair.source = std::move(source);
  pair.target = std::move(target);
  if (pair.basis_size() < 2) throw DegenerateSpectrum("matching needs at least two eigenpairs per shape");
  const std::vector<double> times = hks_times(pair.source.basis, config.hks_times);
  pair.source_features = compute_hks(pair.source.basis, times);
  pair.target_features = compute_hks(pair.target.basis, times);
  pair.source_arap = std::make_shared<const ArapModel>(pair.source.mesh);
  return pair;
}

PreparedPair prepare_pair(TriMesh source, TriMesh target, const MatchConfig& config) {
  auto sized = [&](const TriMesh& mesh) {
    const Index k = required_basis_size(config.k_max, config.sigma, mesh.num_vertices());
    if (static_cast<double>(k) < config.k_max + 7.0 / config.sigma)
      spdlog::warn("mesh with {} vertices supports only {} eigenpairs; the schedule is truncated",
                   mesh.num_vertices(), k);
    return k;
  };
  const Index ks = sized(source);
  const Index kt = sized(target);
  PreparedShape s = prepare_shape(std::move(source), ks, config.eigen, config.cache_dir);
  PreparedShape t = prepare_shape(std::move(target), kt, config.eigen, config.cache_dir);
  return prepare_pair(std::move(s), std::move(t), config);
}

PreparedPair with_rotated_source(const PreparedPair& pair, const Eigen::Matrix3d& rotation) {
  PreparedPair out = pair;
  out.source = rotated(pair.source, rotation);
  return out;
}

namespace {

ShellLevel level_for(const MatchConfig& config, double k, Index basis_size) {
  return config.level_kind == LevelKind::Indicator ? make_indicator_level(k, basis_size)
                                                   : make_shell_level(k, config.sigma, basis_size);
}

void check_finite(const EnergyTerms& e, double k, const char* step) {
  if (std::isfinite(e.total)) return;
  std::ostringstream msg;
  msg << "energy became non-finite after the " << step << " step at level K=" << k << " (alignment=" << e.alignment
      << ", feature=" << e.feature << ", arap=" << e.arap << ")";
  throw NonFiniteEnergy(msg.str());
}

// Working state of one level.
struct LevelContext {
  Index width = 0;
  Coords source_smooth;
  Coords target_smooth;
  ProductEmbedding target_embedding;
  Eigen::MatrixXd source_spectral;  // weighted, before the functional map
};

}  // namespace

MatchResult hierarchical_match(const PreparedPair& pair, const MatchConfig& config, const Eigen::MatrixX3d& init_tau,
                               const std::optional<Eigen::MatrixXd>& init_c) {
  const Index basis_size = pair.basis_size();
  const double k_max = std::min(config.k_max, static_cast<double>(basis_size));
  Schedule schedule;
  if (config.k_init < k_max) {
    schedule = make_schedule(config.k_init, k_max, config.steps);
  } else {
    spdlog::warn("basis size {} does not exceed K_init; matching at a single level", basis_size);
    schedule.levels = {k_max};
  }

  const ChannelWeights& weights = config.weights;
  const bool with_features = config.use_features && config.lambda_feat != 0.0;
  const FeatureTerm features =
      make_feature_term(pair.source.basis, pair.source_features, pair.target.basis, pair.target_features, basis_size);
  const FeatureTerm* feature_ptr = with_features ? &features : nullptr;
  const ArapModel& arap = *pair.source_arap;

  const Eigen::MatrixXd& phi_all = pair.source.basis.eigenvectors;
  Eigen::MatrixXd arap_gram;
  if (config.lambda_arap != 0.0) {
    const Index widest = level_for(config, schedule.levels.back(), basis_size).width();
    arap_gram = arap.gram(phi_all.leftCols(widest));
  }

  MatchResult result;
  Eigen::MatrixXd c;
  Displacement tau;
  tau.tau = init_tau.size() > 0 ? init_tau : Eigen::MatrixX3d::Zero(1, 3);
  bool have_c = init_c.has_value();
  if (have_c) c = *init_c;

  auto source_embedding = [&](const LevelContext& ctx) {
    return build_embedding(pair.source.mesh.triangles, pair.source.basis, ctx.width, ctx.source_smooth, &c, &tau.tau,
                           weights);
  };
  auto energy_of = [&](const LevelContext& ctx, const ProductEmbedding& src, const PointMap& p) {
    const Coords deformed = ctx.source_smooth + phi_all.leftCols(ctx.width) * tau.tau;
    return total_energy(src, ctx.target_embedding, p, c, feature_ptr, config.lambda_feat, &arap, ctx.source_smooth,
                        deformed, config.lambda_arap);
  };

  LevelContext ctx;
  PointMap p;
  for (const double k : schedule.levels) {
    const ShellLevel source_level = level_for(config, k, pair.source.basis.size());
    const ShellLevel target_level = level_for(config, k, pair.target.basis.size());
    ctx.width = std::min(source_level.width(), target_level.width());
    ctx.source_smooth = smooth_from_coefficients(pair.source.basis, pair.source.coefficients, source_level);
    ctx.target_smooth = smooth_from_coefficients(pair.target.basis, pair.target.coefficients, target_level);
    ctx.target_embedding =
        build_embedding(pair.target.mesh.triangles, pair.target.basis, ctx.width, ctx.target_smooth, nullptr, nullptr, weights);
    ctx.source_spectral = weights.spectral * (phi_all.leftCols(ctx.width) *
                                              spectral_damping(pair.source.basis, ctx.width, weights.damp_spectral).asDiagonal());
    tau = resize_displacement(tau, ctx.width);

    if (!have_c) {
      // Bootstrap from the extrinsic channels, which do not depend on C.
      PointMap seed_map;
      if (weights.xyz != 0.0 || weights.normal != 0.0) {
        ChannelWeights extrinsic = weights;
        extrinsic.spectral = 0.0;
        const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(ctx.width, ctx.width);
        const ProductEmbedding src = build_embedding(pair.source.mesh.triangles, pair.source.basis, ctx.width,
                                                     ctx.source_smooth, &identity, &tau.tau, extrinsic);
        const ProductEmbedding tgt = build_embedding(pair.target.mesh.triangles, pair.target.basis, ctx.width,
                                                     ctx.target_smooth, nullptr, nullptr, extrinsic);
        Eigen::MatrixXd s(src.num_points(), 6), t(tgt.num_points(), 6);
        s << src.coords, src.normals;
        t << tgt.coords, tgt.normals;
        seed_map = nearest_rows(s, t);
      }
      const Eigen::MatrixXd plain = pair.source.basis.eigenvectors.leftCols(ctx.width) *
                                    spectral_damping(pair.source.basis, ctx.width, weights.damp_spectral).asDiagonal();
      const Eigen::MatrixXd target_plain = pair.target.basis.eigenvectors.leftCols(ctx.width) *
                                           spectral_damping(pair.target.basis, ctx.width, weights.damp_spectral).asDiagonal();
      c = solve_functional_map(plain, target_plain, seed_map, with_features ? &features : nullptr,
                               with_features ? config.lambda_feat : 0.0)
              .c;
      have_c = true;
    }
    c = resize_functional_map(c, ctx.width);

    LevelRecord record;
    record.k = k;
    record.width = ctx.width;
    for (int pass = 0; pass < std::max(1, config.inner_passes); ++pass) {
      // (b) point map
      ProductEmbedding src = source_embedding(ctx);
      p = solve_point_map(src, ctx.target_embedding);
      const EnergyTerms after_p = energy_of(ctx, src, p);
      check_finite(after_p, k, "point map");

      // (c) functional map
      c = solve_functional_map(ctx.source_spectral, ctx.target_embedding.spectral, p, feature_ptr, config.lambda_feat).c;
      src = source_embedding(ctx);
      const EnergyTerms after_c = energy_of(ctx, src, p);
      check_finite(after_c, k, "functional map");

      // (d) displacement
      DisplacementProblem problem;
      problem.model = &arap;
      problem.phi = phi_all.leftCols(ctx.width);
      problem.rest = ctx.source_smooth;
      problem.target = ctx.target_smooth;
      problem.map = p;
      problem.xyz_weight = weights.xyz;
      problem.lambda_arap = config.lambda_arap;
      if (arap_gram.size() > 0) problem.arap_gram = arap_gram.topLeftCorner(ctx.width, ctx.width);
      problem.max_iterations = config.arap_iterations;
      problem.tolerance = config.arap_tolerance;
      tau = solve_displacement(problem, tau).displacement;

      src = source_embedding(ctx);
      record.after_point_map = after_p.total;
      record.after_functional_map = after_c.total;
      record.energy = energy_of(ctx, src, p);
      check_finite(record.energy, k, "displacement");
    }
    result.trace.push_back(record);
  }

  // Refresh the correspondence for the final (C, tau).
  result.source_embedding = source_embedding(ctx);
  result.target_embedding = ctx.target_embedding;
  result.point_map = solve_point_map(result.source_embedding, result.target_embedding);
  result.final_energy = energy_of(ctx, result.source_embedding, result.point_map);
  check_finite(result.final_energy, schedule.levels.back(), "final point map");
  result.reverse_map = nearest_rows(result.target_embedding.stacked(), result.source_embedding.stacked());
  result.reverse_map.direction = MapDirection::SourceToTarget;
  result.deformed_source = pair.source.mesh.vertices + phi_all.leftCols(ctx.width) * tau.tau;
  if (!result.deformed_source.allFinite()) throw NonFiniteEnergy("deformed source contains NaN or Inf");
  result.functional_map = c;
  result.tau = tau.tau;
  return result;
}

PointMap chain_via_template(const MatchResult& a_to_template, const MatchResult& b_to_template) {
  const PointMap& a_to_t = a_to_template.reverse_map;   // A vertex -> template vertex
  const PointMap& t_to_b = b_to_template.point_map;     // template vertex -> B vertex
  if (a_to_t.codomain_size != t_to_b.size())
    throw TemplateMismatch("template has " + std::to_string(a_to_t.codomain_size) + " vertices in the first match and " +
                           std::to_string(t_to_b.size()) + " in the second");
  PointMap out;
  out.direction = MapDirection::SourceToTarget;
  out.codomain_size = t_to_b.codomain_size;
  out.assignments.reserve(a_to_t.assignments.size());
  for (const Index t : a_to_t.assignments) out.assignments.push_back(t_to_b.assignments[static_cast<size_t>(t)]);
  return out;
}

}  // namespace shells
