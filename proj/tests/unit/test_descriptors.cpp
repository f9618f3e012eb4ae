#include "doctest.h"

#include "shapes.hpp"
#include "temp_dir.hpp"

#include "shells/descriptors.hpp"
#include "shells/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <vector>

using namespace shells;
using namespace shells::testing;

namespace {

void write_matrix(const std::filesystem::path& p, const Eigen::MatrixXd& m) {
  std::ofstream out(p);
  out.precision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << "\n";
  }
}

}  // namespace

TEST_CASE("HKS matches a direct heat-kernel sum") {
  const TriMesh m = to_mesh(humanoid(2));
  const SpectralBasis b = compute_basis(m, 60);
  const DescriptorField hks = compute_hks(b, 8);
  REQUIRE(hks.scales.size() == 8);
  CHECK(hks.scales.front() == doctest::Approx(4.0 * std::log(10.0) / b.eigenvalues[59]));
  CHECK(hks.scales.back() == doctest::Approx(4.0 * std::log(10.0) / b.eigenvalues[1]));
  for (size_t j = 1; j < hks.scales.size(); ++j) {
    const double step = std::log(hks.scales[j] / hks.scales[j - 1]);
    CHECK(step == doctest::Approx(std::log(hks.scales[1] / hks.scales[0])));
  }
  for (size_t j = 0; j < hks.scales.size(); ++j) {
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(m.num_vertices());
    for (Index k = 0; k < b.size(); ++k)
      raw += std::exp(-b.eigenvalues[k] * hks.scales[j]) * b.eigenvectors.col(k).cwiseAbs2();
    raw /= std::sqrt(raw.cwiseAbs2().dot(m.vertex_masses));
    CHECK((hks.values.col(static_cast<Index>(j)) - raw).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("HKS columns have unit mass norm") {
  const TriMesh m = to_mesh(humanoid(2));
  const DescriptorField hks = compute_hks(compute_basis(m, 40));
  CHECK(hks.dims() == 16);
  for (Index j = 0; j < hks.dims(); ++j)
    CHECK(std::sqrt(hks.values.col(j).cwiseAbs2().dot(m.vertex_masses)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("HKS is nearly constant on a sphere") {
  const TriMesh m = to_mesh(icosphere(3));
  const DescriptorField hks = compute_hks(compute_basis(m, 50));
  for (Index j = 0; j < hks.dims(); ++j) {
    const auto col = hks.values.col(j);
    CHECK(col.maxCoeff() <= 1.02 * col.minCoeff());
  }
}

TEST_CASE("a spike carries the largest small-time HKS value") {
  RawShape s = icosphere(3);
  const Index spike = 17;
  s.vertices.row(spike) *= 1.3;
  const TriMesh m = to_mesh(s);
  const DescriptorField hks = compute_hks(compute_basis(m, 100));
  Index arg = -1;
  hks.values.col(0).maxCoeff(&arg);
  CHECK(arg == spike);
}

TEST_CASE("HKS ignores eigenvector signs") {
  const TriMesh m = to_mesh(humanoid(2));
  SpectralBasis b = compute_basis(m, 30);
  const DescriptorField a = compute_hks(b, 6);
  for (Index k = 1; k < b.size(); k += 2) b.eigenvectors.col(k) *= -1.0;
  const DescriptorField c = compute_hks(b, 6);
  CHECK((a.values - c.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("HKS rejects degenerate spectra") {
  RawShape two = tetrahedron();
  RawShape other = tetrahedron();
  other.vertices.array() += 5.0;
  Coords v(8, 3);
  v << two.vertices, other.vertices;
  Faces f(8, 3);
  f << two.triangles, other.triangles.array() + 4;
  const TriMesh m = to_mesh({v, f});
  CHECK_THROWS_AS(compute_hks(compute_basis(m, 3)), DegenerateSpectrum);
  CHECK_THROWS_AS(compute_hks(compute_basis(to_mesh(icosphere(1)), 1)), DegenerateSpectrum);
}

TEST_CASE("external descriptors are normalized and validated") {
  TempDir dir;
  const TriMesh m = to_mesh(icosphere(1));
  const Index n = m.num_vertices();
  write_matrix(dir / "ones.txt", Eigen::MatrixXd::Ones(n, 1));
  const DescriptorField ones = load_external_descriptors(dir / "ones.txt", m);
  CHECK(ones.dims() == 1);
  CHECK(ones.kind == DescriptorKind::External);
  CHECK((ones.values.array() - 1.0).abs().maxCoeff() < 1e-12);

  write_matrix(dir / "short.txt", Eigen::MatrixXd::Ones(n - 1, 2));
  CHECK_THROWS_AS(load_external_descriptors(dir / "short.txt", m), DimensionMismatch);

  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(n, 2);
  bad(3, 1) = std::nan("");
  CHECK_THROWS_AS(normalize_descriptor(bad, m.vertex_masses, DescriptorKind::External), NonFiniteValue);
  std::ofstream(dir / "nan.txt") << [&] {
    std::string text;
    for (Index i = 0; i < n; ++i) text += i == 2 ? "nan\n" : "1\n";
    return text;
  }();
  CHECK_THROWS_AS(load_external_descriptors(dir / "nan.txt", m), InputError);
}

TEST_CASE("external descriptors are scale free and concatenate column-wise") {
  TempDir dir;
  const TriMesh m = to_mesh(humanoid(1));
  const Index n = m.num_vertices();
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(n, 2).array() + 2.0;
  const Eigen::MatrixXd c = Eigen::MatrixXd::Random(n, 3).array() + 2.0;
  write_matrix(dir / "a.txt", a);
  write_matrix(dir / "a_scaled.txt", 37.5 * a);
  write_matrix(dir / "c.txt", c);
  Eigen::MatrixXd both(n, 5);
  both << a, c;
  write_matrix(dir / "both.txt", both);
  const DescriptorField fa = load_external_descriptors(dir / "a.txt", m);
  const DescriptorField fs = load_external_descriptors(dir / "a_scaled.txt", m);
  CHECK((fa.values - fs.values).cwiseAbs().maxCoeff() < 1e-9);
  const std::vector<DescriptorField> parts = {fa, load_external_descriptors(dir / "c.txt", m)};
  const DescriptorField joined = concatenate(parts);
  const DescriptorField whole = load_external_descriptors(dir / "both.txt", m);
  CHECK(joined.dims() == 5);
  CHECK((joined.values - whole.values).cwiseAbs().maxCoeff() < 1e-12);
}
