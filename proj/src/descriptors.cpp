#include "shells/descriptors.hpp"

#include "shells/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace shells {

std::vector<double> hks_times(const SpectralBasis& basis, Index num_times) {
  if (basis.size() < 2) throw DegenerateSpectrum("HKS needs at least two eigenpairs");
  const double lambda_2 = basis.eigenvalues[1];
  const double lambda_max = basis.eigenvalues[basis.size() - 1];
  if (!(lambda_2 > 1e-12)) throw DegenerateSpectrum("second eigenvalue vanishes; mesh is disconnected");
  const double t_min = 4.0 * std::log(10.0) / lambda_max;
  const double t_max = 4.0 * std::log(10.0) / lambda_2;
  std::vector<double> times(static_cast<size_t>(num_times));
  for (Index i = 0; i < num_times; ++i) {
    const double u = num_times == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(num_times - 1);
    times[static_cast<size_t>(i)] = t_min * std::pow(t_max / t_min, u);
  }
  return times;
}

DescriptorField compute_hks(const SpectralBasis& basis, std::span<const double> times) {
  if (basis.size() < 2) throw DegenerateSpectrum("HKS needs at least two eigenpairs");
  const Eigen::MatrixXd squared = basis.eigenvectors.array().square().matrix();
  Eigen::MatrixXd decay(basis.size(), static_cast<Index>(times.size()));
  for (Index j = 0; j < decay.cols(); ++j)
    decay.col(j) = (-basis.eigenvalues.array() * times[static_cast<size_t>(j)]).exp().matrix();
  DescriptorField field = normalize_descriptor(squared * decay, basis.masses, DescriptorKind::Hks);
  field.scales.assign(times.begin(), times.end());
  return field;
}

DescriptorField compute_hks(const SpectralBasis& basis, Index num_times) {
  const std::vector<double> times = hks_times(basis, num_times);
  return compute_hks(basis, times);
}

DescriptorField normalize_descriptor(Eigen::MatrixXd values, const Eigen::VectorXd& masses, DescriptorKind kind) {
  if (values.rows() != masses.size())
    throw DimensionMismatch("descriptor has " + std::to_string(values.rows()) + " rows for " +
                            std::to_string(masses.size()) + " vertices");
  if (values.cols() < 1) throw DimensionMismatch("descriptor has no columns");
  if (!values.allFinite()) throw NonFiniteValue("descriptor contains NaN or Inf");
  for (Index j = 0; j < values.cols(); ++j) {
    const double norm = std::sqrt(masses.dot(values.col(j).cwiseAbs2()));
    if (norm > 0) values.col(j) /= norm;
  }
  DescriptorField field;
  field.values = std::move(values);
  field.kind = kind;
  return field;
}

DescriptorField load_external_descriptors(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open descriptor file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string token;
    while (ls >> token) {
      try {
        row.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw ParseError(path.string() + ": bad value '" + token + "' on row " + std::to_string(rows.size()));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path.string() + ": ragged row " + std::to_string(rows.size()));
    rows.push_back(std::move(row));
  }
  if (static_cast<Index>(rows.size()) != mesh.num_vertices())
    throw DimensionMismatch(path.string() + ": " + std::to_string(rows.size()) + " rows for " +
                            std::to_string(mesh.num_vertices()) + " vertices");
  const Index cols = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
  Eigen::MatrixXd values(static_cast<Index>(rows.size()), cols);
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < cols; ++j) values(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return normalize_descriptor(std::move(values), mesh.vertex_masses, DescriptorKind::External);
}

DescriptorField concatenate(std::span<const DescriptorField> fields) {
  if (fields.empty()) throw DimensionMismatch("nothing to concatenate");
  const Index rows = fields.front().values.rows();
  Index cols = 0;
  for (const auto& f : fields) {
    if (f.values.rows() != rows) throw DimensionMismatch("descriptor fields live on different meshes");
    cols += f.dims();
  }
  DescriptorField out;
  out.values.resize(rows, cols);
  out.kind = fields.front().kind;
  Index at = 0;
  for (const auto& f : fields) {
    out.values.middleCols(at, f.dims()) = f.values;
    at += f.dims();
    if (f.kind != out.kind) out.kind = DescriptorKind::Mixed;
    out.scales.insert(out.scales.end(), f.scales.begin(), f.scales.end());
  }
  return out;
}

}  // namespace shells
