#include "shells/cli.hpp"

#include "shells/errors.hpp"
#include "shells/evaluation.hpp"
#include "shells/mesh_io.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace shells {

namespace {

int guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const NumericalError& e) {
    spdlog::error("{}", e.what());
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitNumerical;
  }
}

void apply_threads(const RunConfig& config) {
#ifdef _OPENMP
  if (config.threads > 0) omp_set_num_threads(config.threads);
#else
  (void)config;
#endif
}

std::filesystem::path prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw ParseError("cannot create output directory " + dir.string());
  return dir;
}

TriMesh load_input(const std::filesystem::path& path, const RunConfig& config) {
  if (!std::filesystem::exists(path)) throw ParseError("input file not found: " + path.string());
  return load_mesh(path, std::nullopt, config.mesh);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out.precision(12);
  return out;
}

void write_trace(const std::filesystem::path& path, const MatchResult& r) {
  auto out = open_out(path);
  out << "level,k,width,after_point_map,after_functional_map,alignment,feature,arap,total\n";
  for (size_t i = 0; i < r.trace.size(); ++i) {
    const auto& t = r.trace[i];
    out << i << ',' << t.k << ',' << t.width << ',' << t.after_point_map << ',' << t.after_functional_map << ','
        << t.energy.alignment << ',' << t.energy.feature << ',' << t.energy.arap << ',' << t.energy.total << '\n';
  }
}

void write_mcmc_report(const std::filesystem::path& path, const McmcResult& m) {
  auto out = open_out(path);
  out << "proposal,seed,energy,accepted,best\n";
  out << "start,," << m.start_energy << ",1,0\n";
  for (size_t i = 0; i < m.proposals.size(); ++i) {
    const auto& p = m.proposals[i];
    out << i << ',' << p.seed << ',' << p.energy << ',' << (p.accepted ? 1 : 0) << ','
        << (static_cast<Index>(i) == m.best_index ? 1 : 0) << '\n';
  }
}

void write_rigid_report(const std::filesystem::path& path, const RigidInit& r) {
  auto out = open_out(path);
  out << "candidate,energy,selected,r00,r01,r02,r10,r11,r12,r20,r21,r22\n";
  for (size_t i = 0; i < r.candidates.size(); ++i) {
    const auto& c = r.candidates[i];
    out << i << ',' << c.energy << ',' << (static_cast<Index>(i) == r.best_index ? 1 : 0);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) out << ',' << c.rotation(a, b);
    out << '\n';
  }
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  auto out = open_out(path);
  out.precision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

PreparedPair prepare_with_descriptors(TriMesh source, TriMesh target, const RunConfig& config) {
  PreparedPair pair = prepare_pair(std::move(source), std::move(target), config.match.config);
  const bool has_src = !config.source_descriptors.empty();
  const bool has_tgt = !config.target_descriptors.empty();
  if (has_src != has_tgt) throw ConfigError("external descriptors must be given for both shapes");
  if (has_src) {
    const DescriptorField s = load_external_descriptors(config.source_descriptors, pair.source.mesh);
    const DescriptorField t = load_external_descriptors(config.target_descriptors, pair.target.mesh);
    const DescriptorField sf[] = {pair.source_features, s};
    const DescriptorField tf[] = {pair.target_features, t};
    pair.source_features = concatenate(sf);
    pair.target_features = concatenate(tf);
  }
  return pair;
}

PointMap ground_truth_map(const std::string& spec, Index domain_size, Index codomain_size, bool one_based) {
  if (spec == "identity") {
    if (domain_size != codomain_size)
      throw DimensionMismatch("identity ground truth needs equal vertex counts, got " + std::to_string(domain_size) +
                              " and " + std::to_string(codomain_size));
    PointMap map = identity_map(domain_size);
    map.codomain_size = codomain_size;
    return map;
  }
  if (!std::filesystem::exists(spec)) throw ParseError("ground truth file not found: " + spec);
  return read_correspondence(spec, one_based, codomain_size);
}

}  // namespace

int cmd_match(const std::filesystem::path& source_path, const std::filesystem::path& target_path,
              const std::filesystem::path& out_dir, const RunConfig& config,
              const std::filesystem::path& mcmc_report) {
  return guarded([&] {
    validate(config);
    apply_threads(config);
    TriMesh source = load_input(source_path, config);
    TriMesh target = load_input(target_path, config);
    prepare_dir(out_dir);
    const PreparedPair pair = prepare_with_descriptors(std::move(source), std::move(target), config);
    const FullMatch result = match_shapes(pair, config.match);
    const MatchResult& m = result.match;

    write_correspondence(out_dir / "correspondence.txt", m.point_map, config.one_based);
    write_correspondence(out_dir / "correspondence_source_to_target.txt", m.reverse_map, config.one_based);
    write_mesh(out_dir / "deformed_source.off", m.deformed_source, pair.source.mesh.triangles);
    const Coords colors = embedding_colors(m.source_embedding);
    write_mesh(out_dir / "deformed_source.ply", m.deformed_source, pair.source.mesh.triangles, MeshFormat::PlyAscii,
               &colors);
    write_trace(out_dir / "energy_trace.csv", m);
    write_rigid_report(out_dir / "rigid_candidates.csv", result.rigid);
    if (config.match.use_mcmc)
      write_mcmc_report(mcmc_report.empty() ? out_dir / "mcmc_report.csv" : mcmc_report, result.mcmc);
    write_config_snapshot(out_dir / "config.ini", config);
    spdlog::info("matched {} target vertices to {} source vertices; final energy {:.6g}", m.point_map.size(),
                 m.point_map.codomain_size, m.final_energy.total);
  });
}

int cmd_smooth(const std::filesystem::path& mesh_path, double k, double sigma, SmoothMode mode,
               const std::filesystem::path& out_path, const RunConfig& config) {
  return guarded([&] {
    apply_threads(config);
    const TriMesh mesh = load_input(mesh_path, config);
    const Index n = mesh.num_vertices();
    if (!(k >= 1.0)) throw InvalidRange("smoothing level must be at least 1");
    if (!(sigma > 0.0)) throw InvalidRange("sigma must be positive");
    Coords smoothed;
    if (mode == SmoothMode::Spectral) {
      const auto modes = static_cast<Index>(std::floor(k));
      if (modes > n - 1) throw KTooLarge("level " + std::to_string(modes) + " needs more than the " +
                                         std::to_string(n - 1) + " available eigenpairs");
      const SpectralBasis basis = cached_basis(mesh, modes, config.match.config.eigen, config.match.config.cache_dir);
      smoothed = spectral_reconstruct(basis, mesh.vertices, modes);
    } else {
      if (k > static_cast<double>(n - 1))
        throw KTooLarge("level " + std::to_string(k) + " exceeds the " + std::to_string(n - 1) + " available eigenpairs");
      const Index total = required_basis_size(k, sigma, n);
      const SpectralBasis basis = cached_basis(mesh, total, config.match.config.eigen, config.match.config.cache_dir);
      smoothed = smooth_shell(basis, mesh.vertices, make_shell_level(k, sigma, total));
    }
    const auto parent = out_path.has_parent_path() ? out_path.parent_path() : std::filesystem::path(".");
    prepare_dir(parent);
    write_mesh(out_path, smoothed, mesh.triangles);
    RunConfig snapshot = config;
    snapshot.match.config.sigma = sigma;
    write_config_snapshot(parent / (out_path.stem().string() + ".config.ini"), snapshot);
  });
}

int cmd_eval(const std::filesystem::path& pred, const std::string& gt, const std::filesystem::path& codomain_mesh,
             const std::filesystem::path& out_dir, const RunConfig& config,
             const std::filesystem::path& domain_mesh) {
  return guarded([&] {
    apply_threads(config);
    const TriMesh mesh = load_input(codomain_mesh, config);
    if (!std::filesystem::exists(pred)) throw ParseError("prediction file not found: " + pred.string());
    const PointMap predicted = read_correspondence(pred, config.one_based, mesh.num_vertices());
    const PointMap truth = ground_truth_map(gt, predicted.size(), mesh.num_vertices(), config.one_based);
    if (truth.size() != predicted.size())
      throw DimensionMismatch("prediction has " + std::to_string(predicted.size()) + " entries, ground truth " +
                              std::to_string(truth.size()));
    prepare_dir(out_dir);
    const std::vector<double> errors = geodesic_error(predicted, truth, mesh);
    const double mean = mean_error(errors);
    write_errors_csv(out_dir / "errors.csv", errors);
    write_curve_csv(out_dir / "curve.csv", error_curve(errors, default_thresholds(errors, config.eval_thresholds)),
                    pred.stem().string());

    auto summary = open_out(out_dir / "summary.csv");
    summary << "metric,value\nmean_error," << mean << '\n';
    if (!domain_mesh.empty()) {
      const TriMesh domain = load_input(domain_mesh, config);
      if (domain.num_vertices() != predicted.size())
        throw DimensionMismatch("domain mesh has " + std::to_string(domain.num_vertices()) + " vertices, map has " +
                                std::to_string(predicted.size()) + " entries");
      const DistortionReport report = conformal_distortion(
          domain.vertices, domain.triangles, snapped_coordinates(predicted, mesh.vertices), config.distortion_cap);
      write_distortion_csv(out_dir / "distortion.csv", report);
      summary << "mean_distortion," << report.mean << '\n';
    }
    write_config_snapshot(out_dir / "config.ini", config);
    std::cout << "mean geodesic error " << mean << '\n';
  });
}

int cmd_ablate(const std::filesystem::path& manifest, const std::vector<std::string>& switches,
               const std::filesystem::path& out_dir, const RunConfig& config) {
  return guarded([&] {
    validate(config);
    apply_threads(config);
    std::vector<Ablation> chosen;
    for (const auto& s : switches) chosen.push_back(parse_ablation(s));
    if (switches.empty()) chosen = all_ablations();

    std::ifstream in(manifest);
    if (!in) throw ParseError("cannot open manifest " + manifest.string());
    const auto base = manifest.has_parent_path() ? manifest.parent_path() : std::filesystem::path(".");
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path path(p);
      return path.is_absolute() ? path : base / path;
    };
    std::vector<AblationPair> pairs;
    std::string line;
    while (std::getline(in, line)) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::string name, src, tgt, gt;
      if (!(ls >> name)) continue;
      if (!(ls >> src >> tgt >> gt)) throw ParseError("manifest line for '" + name + "' needs source, target and ground truth");
      AblationPair pair;
      pair.name = name;
      pair.source = load_input(resolve(src), config);
      pair.target = load_input(resolve(tgt), config);
      pair.ground_truth = ground_truth_map(gt == "identity" ? gt : resolve(gt).string(), pair.target.num_vertices(),
                                           pair.source.num_vertices(), config.one_based);
      if (pair.ground_truth.size() != pair.target.num_vertices())
        throw DimensionMismatch("ground truth for '" + name + "' does not cover the target");
      pairs.push_back(std::move(pair));
    }
    if (pairs.empty()) throw ParseError("manifest lists no pairs");
    prepare_dir(out_dir);
    const std::vector<AblationRow> rows = run_ablation(pairs, config.match, chosen);
    write_ablation_csv(out_dir / "ablation.csv", rows);
    auto detail = open_out(out_dir / "ablation_pairs.csv");
    detail << "switch,pair,error,distortion,failed\n";
    for (const auto& row : rows)
      for (size_t i = 0; i < pairs.size(); ++i)
        detail << ablation_name(row.ablation) << ',' << pairs[i].name << ',' << row.pair_errors[i] << ','
               << row.pair_distortions[i] << ',' << (row.pair_failed[i] ? 1 : 0) << '\n';
    write_config_snapshot(out_dir / "config.ini", config);
  });
}

int cmd_init(const std::filesystem::path& source_path, const std::filesystem::path& target_path,
             const std::filesystem::path& out_dir, const RunConfig& config) {
  return guarded([&] {
    validate(config);
    apply_threads(config);
    const TriMesh source = load_input(source_path, config);
    const TriMesh target = load_input(target_path, config);
    prepare_dir(out_dir);
    const MatchOptions& options = config.match;
    const MatchConfig surrogate_config = surrogate_match_config(options.config, options.surrogate);
    const Decimation source_dec = decimate(source, options.surrogate.vertex_budget);
    const Decimation target_dec = decimate(target, options.surrogate.vertex_budget);
    const PreparedPair pair = prepare_pair(source_dec.mesh, target_dec.mesh, surrogate_config);

    RigidInit rigid;
    if (options.rigid == RigidMode::Search)
      rigid = rigid_init(pair, surrogate_config, options.surrogate, derive_seed(options.seed, 1), options.parallel);
    else if (options.rigid == RigidMode::Random)
      rigid.rotation = random_rotation(derive_seed(options.seed, 3));
    write_rigid_report(out_dir / "rigid_candidates.csv", rigid);
    write_matrix(out_dir / "rotation.txt", rigid.rotation);
    if (options.use_mcmc) {
      const McmcResult mcmc = mcmc_search(with_rotated_source(pair, rigid.rotation), surrogate_config, options.surrogate,
                                          derive_seed(options.seed, 2), options.parallel);
      write_mcmc_report(out_dir / "mcmc_report.csv", mcmc);
      write_matrix(out_dir / "init_tau.txt", mcmc.best_tau);
      std::cout << "best proposal " << mcmc.best_index << " energy " << mcmc.best_energy << '\n';
    }
    write_config_snapshot(out_dir / "config.ini", config);
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Dense shape correspondence by coarse-to-fine smooth shell alignment", "shells"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool one_based = false;
  bool verbose = false;
  bool quiet = false;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--set", assignments, "Override a configuration key, e.g. --set alignment.lambda_arap=5");
  app.add_option("--seed", seed, "Root random seed");
  app.add_option("--threads", threads, "Worker threads (0 = default)");
  app.add_flag("--one-based", one_based, "Read and write correspondences with 1-based indices");
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Only warnings and errors");

  std::string source, target, out;

  auto* match = app.add_subcommand("match", "Match a source mesh to a target mesh");
  std::string mcmc_report;
  bool no_mcmc = false;
  std::string rigid;
  match->add_option("source", source, "Source mesh (OFF or PLY)")->required();
  match->add_option("target", target, "Target mesh (OFF or PLY)")->required();
  match->add_option("-o,--out", out, "Output directory")->required();
  match->add_option("--mcmc-report", mcmc_report, "Where to write the MCMC proposal CSV");
  match->add_flag("--no-mcmc", no_mcmc, "Skip the MCMC initialization");
  match->add_option("--rigid", rigid, "Rigid pose: search, identity or random")
      ->check(CLI::IsMember({"search", "identity", "random"}));
  std::string source_desc, target_desc;
  match->add_option("--source-descriptors", source_desc, "External descriptor matrix for the source");
  match->add_option("--target-descriptors", target_desc, "External descriptor matrix for the target");

  auto* smooth = app.add_subcommand("smooth", "Write the smooth shell or spectral reconstruction of a mesh");
  std::string mesh_path;
  double level = 6.0;
  std::optional<double> sigma;
  std::string mode = "shell";
  smooth->add_option("mesh", mesh_path, "Input mesh")->required();
  smooth->add_option("-k,--level", level, "Smoothing level K")->required();
  smooth->add_option("--sigma", sigma, "Sigmoid steepness");
  smooth->add_option("--mode", mode, "shell or spectral")->check(CLI::IsMember({"shell", "spectral"}));
  smooth->add_option("-o,--out", out, "Output mesh")->required();

  auto* eval = app.add_subcommand("eval", "Geodesic error, error curve and distortion of a correspondence");
  std::string pred, gt, codomain, domain;
  eval->add_option("--pred", pred, "Predicted correspondence file")->required();
  eval->add_option("--gt", gt, "Ground truth file or 'identity'")->required();
  eval->add_option("--mesh", codomain, "Mesh the correspondence points into")->required();
  eval->add_option("--domain-mesh", domain, "Mesh the correspondence is defined on (enables distortion)");
  eval->add_option("-o,--out", out, "Output directory")->required();

  auto* ablate = app.add_subcommand("ablate", "Run the ablation table over a pair manifest");
  std::string manifest;
  std::vector<std::string> switches;
  ablate->add_option("manifest", manifest, "Pair manifest")->required();
  ablate->add_option("--switch", switches, "Ablation switch (repeatable); all when omitted");
  ablate->add_option("-o,--out", out, "Output directory")->required();

  auto* init = app.add_subcommand("init", "Rigid pose search and MCMC initialization only");
  init->add_option("source", source, "Source mesh")->required();
  init->add_option("target", target, "Target mesh")->required();
  init->add_option("-o,--out", out, "Output directory")->required();
  init->add_flag("--no-mcmc", no_mcmc, "Skip the MCMC stage");
  init->add_option("--rigid", rigid, "Rigid pose: search, identity or random")
      ->check(CLI::IsMember({"search", "identity", "random"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  RunConfig config = default_config();
  const int setup = guarded([&] {
    if (!config_path.empty()) load_config(config, config_path);
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + a + "'");
      set_option(config, a.substr(0, eq), a.substr(eq + 1));
    }
    if (seed) config.match.seed = *seed;
    if (threads) set_option(config, "run.threads", std::to_string(*threads));
    if (one_based) config.one_based = true;
    if (no_mcmc) config.match.use_mcmc = false;
    if (!rigid.empty()) set_option(config, "mcmc.rigid", rigid);
    if (!source_desc.empty()) config.source_descriptors = source_desc;
    if (!target_desc.empty()) config.target_descriptors = target_desc;
  });
  if (setup != kExitOk) return setup;

  if (*match) return cmd_match(source, target, out, config, mcmc_report);
  if (*smooth) {
    const double s = sigma.value_or(config.match.config.sigma);
    return cmd_smooth(mesh_path, level, s, mode == "spectral" ? SmoothMode::Spectral : SmoothMode::Shell, out, config);
  }
  if (*eval) return cmd_eval(pred, gt, codomain, out, config, domain);
  if (*ablate) return cmd_ablate(manifest, switches, out, config);
  if (*init) return cmd_init(source, target, out, config);
  return kExitInput;
}

}  // namespace shells
