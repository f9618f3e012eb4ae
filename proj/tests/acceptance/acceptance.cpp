#include "shapes.hpp"

#include "shells/alignment.hpp"
#include "shells/evaluation.hpp"
#include "shells/mcmc.hpp"
#include "shells/pipeline.hpp"
#include "shells/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace shells;
using namespace shells::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double identity_fraction(const PointMap& map) {
  Index hits = 0;
  for (Index i = 0; i < map.size(); ++i) hits += map.assignments[static_cast<size_t>(i)] == i;
  return static_cast<double>(hits) / static_cast<double>(map.size());
}

Eigen::MatrixXd random_orthogonal(Index k, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(k, k);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

// Transition-ratio bound for smooth shells over a range of levels and
// steepness values, plus the hard-truncation contrast.
Outcome shell_transition_bound() {
  Outcome out;
  const auto start = Clock::now();
  const Decimation body = decimate(to_mesh(humanoid(4)), 2000);
  const std::vector<std::pair<std::string, TriMesh>> meshes = {{"icosphere", to_mesh(icosphere(3))},
                                                               {"humanoid", body.mesh}};
  double worst_margin = -std::numeric_limits<double>::infinity();
  double hard_max = 0.0;
  for (const auto& [name, mesh] : meshes) {
    const SpectralBasis basis = compute_basis(mesh, 80);
    for (double sigma : {0.25, 0.5, 1.0, 2.0}) {
      const auto ratios = verify_transition_bound(basis, mesh.vertices, sigma, 6, 40);
      for (double r : ratios) worst_margin = std::max(worst_margin, r - transition_bound(sigma));
    }
    const auto hard = spectral_transition_ratios(basis, mesh.vertices, 1, 40);
    hard_max = std::max(hard_max, *std::max_element(hard.begin(), hard.end()));
    out.detail << name << " N=" << mesh.num_vertices() << "; ";
  }
  const double elapsed = seconds_since(start);
  out.detail << "max(ratio - bound) = " << worst_margin << ", hard truncation max ratio " << hard_max
             << " vs bound(0.5) " << transition_bound(0.5) << ", " << elapsed << " s";
  out.require(worst_margin <= 1e-9, "ratio above bound");
  out.require(hard_max > transition_bound(0.5), "hard truncation within bound");
  out.require(elapsed < 30.0, "runtime");
  return out;
}

Outcome laplacian_correctness() {
  Outcome out;
  RawShape raw = humanoid(2);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  for (Index i = 0; i < raw.vertices.size(); ++i) raw.vertices.data()[i] += jitter(rng);
  const TriMesh mesh = to_mesh(raw);
  const Index n = mesh.num_vertices();

  const Eigen::VectorXd row_sums = mesh.stiffness * Eigen::VectorXd::Ones(n);
  const double scale = Eigen::MatrixXd(mesh.stiffness).cwiseAbs().maxCoeff();
  const double kernel = row_sums.cwiseAbs().maxCoeff() / scale;

  const Eigen::MatrixXd dense_s = Eigen::MatrixXd(mesh.stiffness);
  const Eigen::MatrixXd dense_m = mesh.vertex_masses.asDiagonal();
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> oracle(dense_s, dense_m);

  const Index k = 40;
  double eig_error = 0.0, ortho_error = 0.0, min_value = 0.0;
  bool ascending = true;
  for (bool sparse : {false, true}) {
    EigenOptions options;
    options.force_sparse = sparse;
    const SpectralBasis basis = compute_basis(mesh, k, options);
    for (Index i = 1; i < k; ++i) {
      const double ref = oracle.eigenvalues()(i);
      eig_error = std::max(eig_error, std::abs(basis.eigenvalues(i) - ref) / std::abs(ref));
      ascending = ascending && basis.eigenvalues(i) >= basis.eigenvalues(i - 1);
    }
    eig_error = std::max(eig_error, std::abs(basis.eigenvalues(0) - oracle.eigenvalues()(0)));
    min_value = std::min(min_value, basis.eigenvalues.minCoeff());
    const Eigen::MatrixXd gram =
        basis.eigenvectors.transpose() * mesh.vertex_masses.asDiagonal() * basis.eigenvectors;
    ortho_error = std::max(ortho_error, (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff());
  }
  out.detail << "N=" << n << ", kernel " << kernel << ", min eigenvalue " << min_value << ", mass-orthonormality "
             << ortho_error << ", oracle deviation " << eig_error;
  out.require(kernel <= 1e-10, "constant kernel");
  out.require(ascending && min_value >= -1e-10, "nonnegative ascending");
  out.require(ortho_error <= 1e-8, "mass orthonormality");
  out.require(eig_error <= 1e-6, "oracle agreement");
  return out;
}

Outcome subproblem_exactness() {
  Outcome out;
  std::mt19937 rng(11);
  std::normal_distribution<double> normal;

  Index nn_mismatches = 0;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd source(200 - 10 * trial, 16), target(180 + 4 * trial, 16);
    for (Index i = 0; i < source.size(); ++i) source.data()[i] = normal(rng);
    for (Index i = 0; i < target.size(); ++i) target.data()[i] = normal(rng);
    const PointMap fast = nearest_rows(source, target);
    for (Index m = 0; m < target.rows(); ++m) {
      Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Index s = 0; s < source.rows(); ++s) {
        const double d = (source.row(s) - target.row(m)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = s;
        }
      }
      nn_mismatches += fast.assignments[static_cast<size_t>(m)] != best;
    }
  }

  const TriMesh mesh = to_mesh(humanoid(2));
  const SpectralBasis basis = compute_basis(mesh, 40);
  const Eigen::MatrixXd phi = basis.eigenvectors.leftCols(20);
  const Eigen::MatrixXd q = random_orthogonal(20, 5);
  const FunctionalMap planted =
      solve_functional_map(phi, phi * q.transpose(), identity_map(mesh.num_vertices()), nullptr, 0.0);
  const double procrustes_error = (planted.c - q).norm();

  const ArapModel model(mesh);
  const Eigen::Matrix3d rot = axis_rotation(Eigen::Vector3d(1, 2, 3), 0.8);
  const Coords moved = (mesh.vertices * rot.transpose()).rowwise() + Eigen::RowVector3d(0.1, 0.2, -0.3);
  const double rigid_energy = arap_energy(model, mesh.vertices, moved, fit_rotations(model, mesh.vertices, moved));

  const Coords rest = smooth_shell(basis, mesh.vertices, make_shell_level(30.5, 0.5, 40));
  DisplacementProblem problem;
  problem.model = &model;
  problem.phi = phi;
  problem.rest = rest;
  problem.map = identity_map(mesh.num_vertices());
  problem.xyz_weight = 1.3;
  problem.lambda_arap = 3.0;
  problem.target = rest;
  std::normal_distribution<double> small(0.0, 0.05);
  for (Index i = 0; i < problem.target.size(); ++i) problem.target.data()[i] += small(rng);
  problem.arap_gram = model.gram(phi);
  Eigen::MatrixX3d tau(20, 3);
  for (Index i = 0; i < tau.size(); ++i) tau.data()[i] = small(rng);
  const ArapState state = fit_rotations(model, rest, rest + phi * Eigen::MatrixX3d::Random(20, 3) * 0.1);
  const Eigen::MatrixX3d grad = displacement_gradient(problem, tau, state);
  Eigen::MatrixX3d fd(20, 3);
  const double h = 1e-5;
  for (Index i = 0; i < tau.size(); ++i) {
    Eigen::MatrixX3d up = tau, down = tau;
    up.data()[i] += h;
    down.data()[i] -= h;
    fd.data()[i] = (displacement_objective(problem, up, state) - displacement_objective(problem, down, state)) / (2 * h);
  }
  const double grad_error = (grad - fd).norm() / fd.norm();

  double worst_increase = -std::numeric_limits<double>::infinity();
  problem.target = bend(rest, -0.1, 0.6, 0.9);
  problem.max_iterations = 25;
  problem.tolerance = 0.0;
  for (double lambda : {0.5, 10.0, 100.0}) {
    problem.lambda_arap = lambda;
    const DisplacementResult r = solve_displacement(problem, Displacement{Eigen::MatrixX3d::Zero(20, 3)});
    for (size_t i = 1; i < r.energies.size(); ++i)
      worst_increase = std::max(worst_increase, (r.energies[i] - r.energies[i - 1]) / std::max(1.0, r.energies[i - 1]));
  }

  out.detail << "NN mismatches " << nn_mismatches << ", Procrustes error " << procrustes_error << ", rigid ARAP "
             << rigid_energy << ", gradient rel. error " << grad_error << ", largest local-global increase "
             << worst_increase;
  out.require(nn_mismatches == 0, "nearest neighbours");
  out.require(procrustes_error <= 1e-6, "Procrustes");
  out.require(rigid_energy <= 1e-8, "ARAP rigid");
  out.require(grad_error <= 1e-4, "gradient");
  out.require(worst_increase <= 1e-10, "monotone local-global");
  return out;
}

Outcome self_match() {
  Outcome out;
  const RawShape raw = humanoid(4);
  const auto rotations = octahedral_rotations();
  std::mt19937 rng(2024);
  const size_t pick = 1 + std::uniform_int_distribution<size_t>(0, rotations.size() - 2)(rng);
  const Coords rotated = raw.vertices * rotations[pick].transpose();

  const auto start = Clock::now();
  MatchOptions options;
  options.seed = 5;
  const FullMatch result = match_shapes(to_mesh(raw), make_mesh(rotated, raw.triangles), options);
  const double elapsed = seconds_since(start);

  const TriMesh mesh = to_mesh(raw);
  const double fraction = identity_fraction(result.match.point_map);
  const double mean = mean_error(geodesic_error(result.match.point_map, identity_map(mesh.num_vertices()), mesh));
  out.detail << "N=" << mesh.num_vertices() << ", octahedral rotation #" << pick << ", identity " << 100.0 * fraction
             << "%, mean error " << mean << ", " << elapsed << " s";
  out.require(fraction >= 0.99, "identity fraction");
  out.require(mean <= 1e-3, "mean error");
  out.require(elapsed <= 300.0, "runtime");
  return out;
}

AblationPair bent_capsule() {
  const RawShape raw = capsule(32, 30, 4, 3.0, 0.5);
  return {"capsule60", to_mesh(raw), make_mesh(bend(raw.vertices, -0.5, 1.0, M_PI / 3.0), raw.triangles),
          identity_map(raw.vertices.rows())};
}

double geodesic_diameter(const TriMesh& mesh) {
  auto farthest = [&](Index from) {
    const auto d = geodesic_distances(mesh, from);
    const auto it = std::max_element(d.begin(), d.end());
    return std::make_pair(static_cast<Index>(it - d.begin()), *it);
  };
  return farthest(farthest(0).first).second;
}

Outcome bent_capsule_accuracy() {
  Outcome out;
  const AblationPair pair = bent_capsule();
  const FullMatch result = match_shapes(pair.source, pair.target, MatchOptions{});
  const auto errors = geodesic_error(result.match.point_map, pair.ground_truth, pair.source);
  const double mean = mean_error(errors);
  const double diameter = geodesic_diameter(pair.source);
  out.detail << "mean error " << mean << " (unit area), " << mean / diameter << " of the geodesic diameter "
             << diameter;
  out.require(mean <= 0.05, "area-normalized error");
  out.require(mean / diameter <= 0.05, "diameter-normalized error");
  return out;
}

Outcome ablation_ordering() {
  Outcome out;
  std::vector<AblationPair> pairs;
  pairs.push_back(bent_capsule());
  const RawShape body = humanoid(3);
  pairs.push_back({"humanoid", to_mesh(body), make_mesh(bend(body.vertices, 0.0, 0.8, 0.7), body.triangles),
                   identity_map(body.vertices.rows())});
  const RawShape twin = humanoid(3, true);
  pairs.push_back({"symmetric", to_mesh(twin), make_mesh(bend(twin.vertices, -0.2, 0.8, 1.2), twin.triangles),
                   identity_map(twin.vertices.rows())});

  const std::vector<Ablation> switches = {Ablation::NoFeatures, Ablation::ExtrinsicOnly,  Ablation::IntrinsicOnly,
                                          Ablation::NoMcmc,     Ablation::RandomRigid,    Ablation::SpectralReconstruction};
  const auto start = Clock::now();
  const std::vector<AblationRow> rows = run_ablation(pairs, MatchOptions{}, switches);
  const AblationRow& full = rows.front();
  for (const auto& row : rows) {
    out.detail << ablation_name(row.ablation) << " " << row.mean_error << "; ";
    if (row.ablation != Ablation::Full)
      out.require(full.mean_error <= row.mean_error, ablation_name(row.ablation) + " beats full");
    if (row.ablation == Ablation::NoMcmc) {
      out.detail << "no_mcmc on symmetric " << row.pair_errors[2] << " vs full " << full.pair_errors[2] << "; ";
      out.require(row.pair_failed[2], "no_mcmc does not fail on the symmetric pair");
    }
  }
  out.detail << seconds_since(start) << " s";
  return out;
}

Outcome mcmc_contracts() {
  Outcome out;
  const RawShape raw = humanoid(4);
  SurrogateConfig settings;
  settings.num_proposals = 8;
  const MatchConfig config = surrogate_match_config(MatchConfig{}, settings);
  const Decimation source = decimate(to_mesh(raw), settings.vertex_budget);
  const Decimation target =
      decimate(make_mesh(bend(raw.vertices, 0.0, 0.8, 0.7), raw.triangles), settings.vertex_budget);
  const PreparedPair pair = prepare_pair(source.mesh, target.mesh, config);

  const auto start = Clock::now();
  const McmcResult a = mcmc_search(pair, config, settings, 99, true);
  const double per_run = seconds_since(start) / static_cast<double>(settings.num_proposals + 1);
  const McmcResult b = mcmc_search(pair, config, settings, 99, true);
  const McmcResult serial = mcmc_search(pair, config, settings, 99, false);

  bool reproducible = a.best_tau == b.best_tau && a.best_field == b.best_field && a.best_index == b.best_index;
  bool parallel_matches = true, dominant = true, always_accept = true;
  double incumbent = a.start_energy;
  for (size_t i = 0; i < a.proposals.size(); ++i) {
    reproducible = reproducible && a.proposals[i].energy == b.proposals[i].energy &&
                   a.proposals[i].tau == b.proposals[i].tau && a.proposals[i].accepted == b.proposals[i].accepted;
    parallel_matches = parallel_matches && a.proposals[i].energy == serial.proposals[i].energy;
    dominant = dominant && a.best_energy <= a.proposals[i].energy;
    if (a.proposals[i].energy <= incumbent) always_accept = always_accept && a.proposals[i].accepted;
    if (a.proposals[i].accepted) incumbent = a.proposals[i].energy;
  }
  dominant = dominant && a.best_energy == a.proposals[static_cast<size_t>(a.best_index)].energy;

  double slowest = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto t = Clock::now();
    surrogate_run(pair, config, sample_proposal(derive_seed(7, static_cast<std::uint64_t>(i)), 6, 1.0));
    slowest = std::max(slowest, seconds_since(t));
  }
  out.detail << "surrogate N=" << source.mesh.num_vertices() << "/" << target.mesh.num_vertices()
             << ", reproducible " << reproducible << ", parallel==serial " << parallel_matches << ", argmin "
             << dominant << ", always-accept " << always_accept << ", slowest surrogate " << slowest
             << " s, mean per run " << per_run << " s";
  out.require(reproducible, "bitwise reproducibility");
  out.require(parallel_matches, "parallel vs serial");
  out.require(dominant, "argmin dominance");
  out.require(always_accept, "always-accept");
  out.require(slowest <= 5.0 && per_run <= 5.0, "surrogate time");
  return out;
}

Outcome metrics() {
  Outcome out;
  const TriMesh mesh = to_mesh(humanoid(3));
  const Eigen::Matrix3d rot = axis_rotation(Eigen::Vector3d(0.3, -1.0, 2.0), 1.1);
  const Coords similar = ((2.7 * mesh.vertices) * rot.transpose()).rowwise() + Eigen::RowVector3d(1.0, -2.0, 0.5);
  const DistortionReport report = conformal_distortion(mesh.vertices, mesh.triangles, similar);
  const double worst = *std::max_element(report.per_triangle.begin(), report.per_triangle.end());

  std::mt19937 rng(8);
  std::uniform_int_distribution<Index> pick(0, mesh.num_vertices() - 1);
  PointMap noisy = identity_map(mesh.num_vertices());
  for (auto& a : noisy.assignments)
    if (rng() % 3 == 0) a = pick(rng);
  const auto errors = geodesic_error(noisy, identity_map(mesh.num_vertices()), mesh);
  const ErrorCurve curve = error_curve(errors, default_thresholds(errors));
  bool cdf = !curve.fractions.empty() && curve.fractions.back() == 1.0;
  for (size_t i = 0; i < curve.fractions.size(); ++i) {
    cdf = cdf && curve.fractions[i] >= 0.0 && curve.fractions[i] <= 1.0;
    if (i > 0) cdf = cdf && curve.fractions[i] >= curve.fractions[i - 1] && curve.thresholds[i] > curve.thresholds[i - 1];
  }
  const double exact = mean_error(geodesic_error(identity_map(mesh.num_vertices()), identity_map(mesh.num_vertices()), mesh));
  out.detail << "similarity distortion max " << worst << ", CDF valid " << cdf << ", error(pred=gt) " << exact;
  out.require(worst <= 1e-9, "distortion");
  out.require(cdf, "CDF");
  out.require(exact == 0.0, "zero error");
  return out;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 shell transition bound", shell_transition_bound},
      {"2 Laplacian correctness", laplacian_correctness},
      {"3 subproblem exactness", subproblem_exactness},
      {"4 self-match", self_match},
      {"5 bent capsule accuracy", bent_capsule_accuracy},
      {"6 ablation ordering", ablation_ordering},
      {"7 MCMC contracts", mcmc_contracts},
      {"8 metrics", metrics},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
