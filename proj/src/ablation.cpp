#include "shells/evaluation.hpp"

#include "shells/errors.hpp"

#include <spdlog/spdlog.h>

#include <fstream>

namespace shells {

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoFeatures: return "lambda_feat=0";
    case Ablation::NoArap: return "lambda_arap=0";
    case Ablation::ExtrinsicOnly: return "extr_only";
    case Ablation::IntrinsicOnly: return "intr_only";
    case Ablation::NoNormals: return "no_normals";
    case Ablation::NoMcmc: return "no_mcmc";
    case Ablation::RandomRigid: return "random_rigid";
    case Ablation::SpectralReconstruction: return "spectral_rec";
  }
  return "unknown";
}

const std::vector<Ablation>& all_ablations() {
  static const std::vector<Ablation> list = {Ablation::NoFeatures,  Ablation::NoArap,      Ablation::ExtrinsicOnly,
                                             Ablation::IntrinsicOnly, Ablation::NoNormals, Ablation::NoMcmc,
                                             Ablation::RandomRigid,   Ablation::SpectralReconstruction};
  return list;
}

Ablation parse_ablation(const std::string& name) {
  if (name == "full") return Ablation::Full;
  for (const Ablation a : all_ablations())
    if (ablation_name(a) == name) return a;
  throw ConfigError("unknown ablation switch '" + name + "'");
}

MatchOptions apply_ablation(const MatchOptions& base, Ablation a) {
  MatchOptions o = base;
  ChannelWeights& w = o.config.weights;
  switch (a) {
    case Ablation::Full: break;
    case Ablation::NoFeatures: o.config.lambda_feat = 0.0; break;
    case Ablation::NoArap: o.config.lambda_arap = 0.0; break;
    case Ablation::ExtrinsicOnly: w.spectral = 0.0; break;
    case Ablation::IntrinsicOnly:
      w.xyz = 0.0;
      w.normal = 0.0;
      break;
    case Ablation::NoNormals: w.normal = 0.0; break;
    case Ablation::NoMcmc: o.use_mcmc = false; break;
    case Ablation::RandomRigid: o.rigid = RigidMode::Random; break;
    case Ablation::SpectralReconstruction: o.config.level_kind = LevelKind::Indicator; break;
  }
  return o;
}

std::vector<AblationRow> run_ablation(const std::vector<AblationPair>& pairs, const MatchOptions& base,
                                      const std::vector<Ablation>& switches) {
  std::vector<Ablation> columns = {Ablation::Full};
  for (const Ablation a : switches)
    if (a != Ablation::Full) columns.push_back(a);

  std::vector<AblationRow> rows(columns.size());
  for (size_t c = 0; c < columns.size(); ++c) rows[c].ablation = columns[c];

  for (const auto& pair : pairs) {
    const PreparedPair prepared = prepare_pair(pair.source, pair.target, base.config);
    for (size_t c = 0; c < columns.size(); ++c) {
      const MatchOptions options = apply_ablation(base, columns[c]);
      const FullMatch result = match_shapes(prepared, options);
      const double err = mean_error(geodesic_error(result.match.point_map, pair.ground_truth, pair.source));
      const Coords snapped = snapped_coordinates(result.match.reverse_map, pair.target.vertices);
      const double distortion = conformal_distortion(pair.source.vertices, pair.source.triangles, snapped).mean;
      spdlog::info("ablation {} on {}: error {:.5f}, distortion {:.4f}", ablation_name(columns[c]), pair.name, err,
                   distortion);
      rows[c].pair_errors.push_back(err);
      rows[c].pair_distortions.push_back(distortion);
    }
  }

  for (auto& row : rows) {
    const size_t n = row.pair_errors.size();
    row.pair_failed.resize(n);
    double err = 0.0, dist = 0.0, failed = 0.0;
    for (size_t i = 0; i < n; ++i) {
      row.pair_failed[i] = row.pair_errors[i] > 2.0 * rows.front().pair_errors[i];
      err += row.pair_errors[i];
      dist += row.pair_distortions[i];
      failed += row.pair_failed[i] ? 1.0 : 0.0;
    }
    if (n > 0) {
      row.mean_error = err / static_cast<double>(n);
      row.mean_distortion = dist / static_cast<double>(n);
      row.failure_rate = failed / static_cast<double>(n);
    }
  }
  return rows;
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out.precision(10);
  out << "switch,avg_error,failure_rate,avg_distortion\n";
  for (const auto& row : rows)
    out << ablation_name(row.ablation) << ',' << row.mean_error << ',' << row.failure_rate << ',' << row.mean_distortion
        << '\n';
}

}  // namespace shells
