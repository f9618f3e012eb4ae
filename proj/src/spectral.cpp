#include "shells/spectral.hpp"

#include "shells/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace shells {

Eigen::MatrixXd spectral_coefficients(const SpectralBasis& basis, const Eigen::MatrixXd& f) {
  if (f.rows() != basis.num_vertices())
    throw DimensionMismatch("function has " + std::to_string(f.rows()) + " rows, basis has " +
                            std::to_string(basis.num_vertices()));
  return basis.eigenvectors.transpose() * (basis.masses.asDiagonal() * f);
}

double mass_norm(const Eigen::VectorXd& masses, const Eigen::MatrixXd& f) {
  return std::sqrt((f.array().square().colwise() * masses.array()).sum());
}

Coords spectral_reconstruct(const SpectralBasis& basis, const Coords& x, Index k) {
  if (k < 1 || k > basis.size())
    throw KTooLarge("reconstruction level " + std::to_string(k) + " outside [1, " + std::to_string(basis.size()) + "]");
  const Eigen::MatrixXd coeffs = basis.eigenvectors.leftCols(k).transpose() * (basis.masses.asDiagonal() * x);
  return basis.eigenvectors.leftCols(k) * coeffs;
}

Index ShellLevel::width() const {
  const Index total = weights.size();
  return std::clamp<Index>(static_cast<Index>(std::lround(k)), 1, std::max<Index>(total, 1));
}

ShellLevel make_shell_level(double k, double sigma, Index k_total) {
  if (!(sigma > 0)) throw InvalidRange("sigmoid steepness must be positive");
  ShellLevel level;
  level.k = k;
  level.sigma = sigma;
  level.kind = LevelKind::Sigmoid;
  level.weights.resize(k_total);
  for (Index i = 0; i < k_total; ++i) {
    const double index = static_cast<double>(i + 1);
    level.weights[i] = 1.0 / (1.0 + std::exp(sigma * (index - k)));
  }
  return level;
}

ShellLevel make_indicator_level(double k, Index k_total) {
  ShellLevel level;
  level.k = k;
  level.sigma = 0.0;
  level.kind = LevelKind::Indicator;
  level.weights.resize(k_total);
  for (Index i = 0; i < k_total; ++i) level.weights[i] = static_cast<double>(i + 1) <= k ? 1.0 : 0.0;
  return level;
}

Coords smooth_from_coefficients(const SpectralBasis& basis, const Eigen::MatrixXd& coefficients,
                                const ShellLevel& level) {
  if (level.weights.size() != basis.size() || coefficients.rows() != basis.size())
    throw DimensionMismatch("shell level and basis sizes disagree");
  return basis.eigenvectors * (level.weights.asDiagonal() * coefficients);
}

Coords smooth_shell(const SpectralBasis& basis, const Coords& x, const ShellLevel& level) {
  return smooth_from_coefficients(basis, spectral_coefficients(basis, x), level);
}

double transition_bound(double sigma) { return std::abs(1.0 - std::exp(-sigma)); }

std::vector<double> verify_transition_bound(const SpectralBasis& basis, const Coords& x, double sigma,
                                            Index k_first, Index k_last) {
  const double limit = static_cast<double>(basis.size()) - 7.0 / sigma;
  if (k_first < 1 || k_first > k_last || static_cast<double>(k_last) > limit)
    throw InvalidRange("transition range [" + std::to_string(k_first) + ", " + std::to_string(k_last) +
                       "] must lie within [1, K_total - 7/sigma]");
  const Eigen::MatrixXd coeffs = spectral_coefficients(basis, x);
  std::vector<double> ratios;
  Coords current = smooth_from_coefficients(basis, coeffs, make_shell_level(static_cast<double>(k_first), sigma, basis.size()));
  for (Index k = k_first; k <= k_last; ++k) {
    Coords next = smooth_from_coefficients(basis, coeffs, make_shell_level(static_cast<double>(k + 1), sigma, basis.size()));
    ratios.push_back(mass_norm(basis.masses, next - current) / mass_norm(basis.masses, next));
    current = std::move(next);
  }
  return ratios;
}

std::vector<double> spectral_transition_ratios(const SpectralBasis& basis, const Coords& x, Index k_first,
                                               Index k_last) {
  if (k_first < 1 || k_first > k_last || k_last + 1 > basis.size())
    throw InvalidRange("transition range exceeds the basis");
  std::vector<double> ratios;
  for (Index k = k_first; k <= k_last; ++k) {
    const Coords lo = spectral_reconstruct(basis, x, k);
    const Coords hi = spectral_reconstruct(basis, x, k + 1);
    ratios.push_back(mass_norm(basis.masses, hi - lo) / mass_norm(basis.masses, hi));
  }
  return ratios;
}

}  // namespace shells
