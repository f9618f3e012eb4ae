#include "shells/spectral.hpp"

#include <spdlog/spdlog.h>

#include <cstring>
#include <fstream>
#include <sstream>

namespace shells {

namespace {

constexpr char kMagic[8] = {'S', 'H', 'B', 'A', 'S', 'I', 'S', '1'};

void fnv(std::uint64_t& h, const void* data, size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

std::uint64_t mesh_hash(const TriMesh& mesh) {
  std::uint64_t h = 14695981039346656037ull;
  const std::int64_t sizes[2] = {mesh.num_vertices(), mesh.num_faces()};
  fnv(h, sizes, sizeof(sizes));
  fnv(h, mesh.vertices.data(), sizeof(double) * static_cast<size_t>(mesh.vertices.size()));
  fnv(h, mesh.triangles.data(), sizeof(int) * static_cast<size_t>(mesh.triangles.size()));
  return h;
}

void save_basis(const std::filesystem::path& path, const SpectralBasis& basis, std::uint64_t hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    spdlog::warn("cannot write basis cache {}", path.string());
    return;
  }
  out.write(kMagic, sizeof(kMagic));
  put(out, hash);
  put(out, static_cast<std::int64_t>(basis.num_vertices()));
  put(out, static_cast<std::int64_t>(basis.size()));
  out.write(reinterpret_cast<const char*>(basis.eigenvalues.data()), sizeof(double) * basis.size());
  out.write(reinterpret_cast<const char*>(basis.eigenvectors.data()),
            sizeof(double) * static_cast<size_t>(basis.eigenvectors.size()));
  out.write(reinterpret_cast<const char*>(basis.masses.data()), sizeof(double) * basis.masses.size());
}

std::optional<SpectralBasis> load_basis(const std::filesystem::path& path, std::uint64_t hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) return std::nullopt;
  std::uint64_t stored = 0;
  std::int64_t n = 0, k = 0;
  if (!get(in, stored) || stored != hash || !get(in, n) || !get(in, k) || n <= 0 || k <= 0) return std::nullopt;
  SpectralBasis basis;
  basis.eigenvalues.resize(k);
  basis.eigenvectors.resize(n, k);
  basis.masses.resize(n);
  in.read(reinterpret_cast<char*>(basis.eigenvalues.data()), sizeof(double) * k);
  in.read(reinterpret_cast<char*>(basis.eigenvectors.data()), sizeof(double) * n * k);
  in.read(reinterpret_cast<char*>(basis.masses.data()), sizeof(double) * n);
  if (!in) return std::nullopt;
  return basis;
}

SpectralBasis cached_basis(const TriMesh& mesh, Index k_total, const EigenOptions& options,
                           const std::filesystem::path& cache_dir) {
  if (cache_dir.empty()) return compute_basis(mesh, k_total, options);
  const std::uint64_t hash = mesh_hash(mesh);
  std::ostringstream name;
  name << std::hex << hash << std::dec << "_k" << k_total << ".basis";
  const std::filesystem::path path = cache_dir / name.str();
  if (auto cached = load_basis(path, hash); cached && cached->size() == k_total) return *cached;
  SpectralBasis basis = compute_basis(mesh, k_total, options);
  std::error_code ec;
  std::filesystem::create_directories(cache_dir, ec);
  save_basis(path, basis, hash);
  return basis;
}

}  // namespace shells
