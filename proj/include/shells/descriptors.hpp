#pragma once

#include "shells/spectral.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace shells {

enum class DescriptorKind { Hks, External, Mixed };

/// Per-vertex feature functions. Every column has unit mass-weighted L2 norm.
struct DescriptorField {
  Eigen::MatrixXd values;
  DescriptorKind kind = DescriptorKind::Hks;
  std::vector<double> scales;  // HKS diffusion times; empty for external fields

  Index dims() const { return values.cols(); }
};

/// num_times diffusion times, log-spaced on [4 ln 10 / lambda_max, 4 ln 10 / lambda_2].
std::vector<double> hks_times(const SpectralBasis& basis, Index num_times);

/// Heat kernel signature h(x, t) = sum_k exp(-lambda_k t) phi_k(x)^2.
DescriptorField compute_hks(const SpectralBasis& basis, Index num_times = 16);
DescriptorField compute_hks(const SpectralBasis& basis, std::span<const double> times);

/// Scales each column to unit mass-weighted L2 norm; rejects NaN/Inf.
DescriptorField normalize_descriptor(Eigen::MatrixXd values, const Eigen::VectorXd& masses, DescriptorKind kind);

/// Whitespace-separated ASCII matrix, one row per vertex.
DescriptorField load_external_descriptors(const std::filesystem::path& path, const TriMesh& mesh);

/// Column-wise concatenation of fields defined on the same mesh.
DescriptorField concatenate(std::span<const DescriptorField> fields);

}  // namespace shells
