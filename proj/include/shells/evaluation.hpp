#pragma once

#include "shells/mcmc.hpp"

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace shells {

/// Per-vertex geodesic error d(pred[i], gt[i]) / sqrt(area) on the mesh both
/// maps point into. Unreachable pairs give +infinity.
std::vector<double> geodesic_error(const PointMap& pred, const PointMap& gt, const TriMesh& codomain_mesh);

/// Mean over the finite entries; logs a warning when some were dropped.
double mean_error(const std::vector<double>& errors);

struct ErrorCurve {
  std::vector<double> thresholds;
  std::vector<double> fractions;
};

/// fractions[t] = |{e <= thresholds[t]}| / count over the finite errors.
ErrorCurve error_curve(const std::vector<double>& errors, const std::vector<double>& thresholds);

/// `count` evenly spaced thresholds on [0, max finite error].
std::vector<double> default_thresholds(const std::vector<double>& errors, Index count = 100);

struct DistortionReport {
  std::vector<double> per_triangle;  // +infinity for collapsed image triangles
  double mean = 0.0;                 // over values capped at `cap`
  double cap = 0.0;
  std::vector<double> bin_edges;
  std::vector<Index> histogram;
};

/// MIPS-type conformal distortion s1/s2 + s2/s1 - 2 of the piecewise linear
/// map from `rest` to `mapped` over each triangle.
DistortionReport conformal_distortion(const Coords& rest, const Faces& triangles, const Coords& mapped,
                                      double cap = 10.0, Index bins = 50);

/// Positions of the matched target vertices, one row per source vertex.
Coords snapped_coordinates(const PointMap& source_to_target, const Coords& target_vertices);

void write_errors_csv(const std::filesystem::path& path, const std::vector<double>& errors);
void write_curve_csv(const std::filesystem::path& path, const ErrorCurve& curve, const std::string& label = "");
void write_distortion_csv(const std::filesystem::path& path, const DistortionReport& report);

// ---------------------------------------------------------------------------
// Ablations

enum class Ablation {
  Full,
  NoFeatures,
  NoArap,
  ExtrinsicOnly,
  IntrinsicOnly,
  NoNormals,
  NoMcmc,
  RandomRigid,
  SpectralReconstruction,
};

/// Switch names as accepted on the command line: lambda_feat=0,
/// lambda_arap=0, extr_only, intr_only, no_normals, no_mcmc, random_rigid,
/// spectral_rec. "full" names the unablated method.
std::string ablation_name(Ablation a);
Ablation parse_ablation(const std::string& name);
const std::vector<Ablation>& all_ablations();

/// Options with one component switched off.
MatchOptions apply_ablation(const MatchOptions& base, Ablation a);

struct AblationPair {
  std::string name;
  TriMesh source;
  TriMesh target;
  PointMap ground_truth;  // target -> source
};

struct AblationRow {
  Ablation ablation = Ablation::Full;
  std::vector<double> pair_errors;
  std::vector<double> pair_distortions;
  std::vector<bool> pair_failed;
  double mean_error = 0.0;
  double failure_rate = 0.0;
  double mean_distortion = 0.0;
};

/// Runs the full method and every switch on every pair. A pair fails under
/// a switch when its mean error exceeds twice the full method's.
std::vector<AblationRow> run_ablation(const std::vector<AblationPair>& pairs, const MatchOptions& base,
                                      const std::vector<Ablation>& switches);

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

}  // namespace shells
