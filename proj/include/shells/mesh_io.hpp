#pragma once

#include "shells/mesh.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace shells {

enum class MeshFormat { Off, PlyAscii };

/// Vertices and faces exactly as stored in a file.
struct RawMesh {
  Coords vertices;
  Faces triangles;
};

/// Picks the format from the file extension (.off / .ply).
MeshFormat format_from_path(const std::filesystem::path& path);

RawMesh read_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format = std::nullopt);

/// read_mesh followed by make_mesh.
TriMesh load_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format = std::nullopt,
                  const MeshOptions& options = {});

/// Coordinates are written with 9 significant digits. `colors`, when given,
/// holds per-vertex RGB in [0, 1] and is only honored by PLY.
void write_mesh(const std::filesystem::path& path, const Coords& vertices, const Faces& triangles,
                std::optional<MeshFormat> format = std::nullopt, const Coords* colors = nullptr);

/// One integer per line; line i holds the image of domain vertex i.
void write_correspondence(const std::filesystem::path& path, const PointMap& map, bool one_based = false);

/// Reads a correspondence file. codomain_size is set to max + 1 unless
/// provided; entries are validated against it.
PointMap read_correspondence(const std::filesystem::path& path, bool one_based = false,
                             std::optional<Index> codomain_size = std::nullopt);

}  // namespace shells
