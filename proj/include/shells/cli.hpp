#pragma once

#include "shells/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace shells {

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitNumerical = 3 };

/// Writes correspondences in both directions, the deformed source, the
/// energy trace, the MCMC report and a config snapshot into `out_dir`.
int cmd_match(const std::filesystem::path& source_path, const std::filesystem::path& target_path,
              const std::filesystem::path& out_dir, const RunConfig& config,
              const std::filesystem::path& mcmc_report = {});

enum class SmoothMode { Shell, Spectral };

/// Writes the level-K smoothing of a mesh.
int cmd_smooth(const std::filesystem::path& mesh_path, double k, double sigma, SmoothMode mode,
               const std::filesystem::path& out_path, const RunConfig& config);

/// Geodesic errors of `pred` against `gt` ("identity" is accepted for
/// shared connectivity) measured on `codomain_mesh`; with `domain_mesh` the
/// conformal distortion of the snapped map is reported too.
int cmd_eval(const std::filesystem::path& pred, const std::string& gt, const std::filesystem::path& codomain_mesh,
             const std::filesystem::path& out_dir, const RunConfig& config,
             const std::filesystem::path& domain_mesh = {});

/// Manifest lines: name source target ground_truth (file or "identity"),
/// '#' starts a comment. The ground truth maps target vertices to source
/// vertices.
int cmd_ablate(const std::filesystem::path& manifest, const std::vector<std::string>& switches,
               const std::filesystem::path& out_dir, const RunConfig& config);

/// Rigid pose search and MCMC only.
int cmd_init(const std::filesystem::path& source_path, const std::filesystem::path& target_path,
             const std::filesystem::path& out_dir, const RunConfig& config);

/// Parses arguments and dispatches to the commands above. Library errors
/// map to exit codes 2 (input) and 3 (numerical).
int run_cli(int argc, char** argv);

}  // namespace shells
