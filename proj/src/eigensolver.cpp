#include "shells/errors.hpp"
#include "shells/spectral.hpp"

#include <Eigen/SparseCholesky>
#include <lapacke.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace shells {

namespace {

void check_request(Index n, Index k) {
  if (k < 1) throw KTooLarge("at least one eigenpair must be requested");
  if (k > n - 1)
    throw KTooLarge("requested " + std::to_string(k) + " eigenpairs but the mesh has only " + std::to_string(n) +
                    " vertices (at most N-1 allowed)");
}

// PSD pencil: tiny negative eigenvalues are rounding noise.
void clamp_eigenvalues(Eigen::VectorXd& values) {
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Index i = 0; i < values.size(); ++i) {
    if (values[i] < -1e-8 * scale)
      throw SolverFailure("pencil produced eigenvalue " + std::to_string(values[i]) + " < 0");
    values[i] = std::max(values[i], 0.0);
  }
}

}  // namespace

void fix_signs(SpectralBasis& basis) {
  for (Index k = 0; k < basis.eigenvectors.cols(); ++k) {
    auto col = basis.eigenvectors.col(k);
    double orientation = 0.0;
    if (k == 0) orientation = basis.masses.dot(col);
    if (std::abs(orientation) < 1e-8) {
      Index arg = 0;
      double best = -1.0;
      for (Index i = 0; i < col.size(); ++i) {
        if (std::abs(col[i]) > best) {
          best = std::abs(col[i]);
          arg = i;
        }
      }
      orientation = col[arg];
    }
    if (orientation < 0) col *= -1.0;
  }
}

SpectralBasis solve_pencil_dense(const SparseMatrix& stiffness, const Eigen::VectorXd& masses, Index k) {
  const Index n = stiffness.rows();
  check_request(n, k);
  const Eigen::VectorXd inv_sqrt = masses.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd a = inv_sqrt.asDiagonal() * Eigen::MatrixXd(stiffness) * inv_sqrt.asDiagonal();

  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, k);
  std::vector<lapack_int> support(2 * static_cast<size_t>(k));
  lapack_int found = 0;
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', static_cast<lapack_int>(n), a.data(),
                     static_cast<lapack_int>(n), 0.0, 0.0, 1, static_cast<lapack_int>(k), 0.0, &found, w.data(),
                     z.data(), static_cast<lapack_int>(n), support.data());
  if (info != 0 || found != k) throw SolverFailure("dense eigensolver failed (info " + std::to_string(info) + ")");

  SpectralBasis basis;
  basis.eigenvalues = w.head(k);
  basis.eigenvectors = inv_sqrt.asDiagonal() * z;
  basis.masses = masses;
  clamp_eigenvalues(basis.eigenvalues);
  return basis;
}

SpectralBasis solve_pencil_lanczos(const SparseMatrix& stiffness, const Eigen::VectorXd& masses, Index k,
                                   const EigenOptions& options) {
  const Index n = stiffness.rows();
  check_request(n, k);

  // Shift slightly below zero so the factorization is definite; the operator
  // (S - shift M)^{-1} M is self-adjoint in the M inner product and its
  // largest eigenvalues map to the smallest of the pencil.
  const double scale = stiffness.diagonal().sum() / masses.sum();
  const double shift = -1e-6 * scale;
  SparseMatrix shifted = stiffness;
  for (Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= shift * masses[i];
  Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
  if (factor.info() != Eigen::Success) throw SolverFailure("sparse factorization of the shifted pencil failed");

  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return factor.solve(masses.cwiseProduct(v));
  };
  auto m_norm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.dot(masses.cwiseProduct(v))); };

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  auto random_vector = [&] {
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
  };

  const Index max_dim = std::min<Index>(n, std::max<Index>(2 * k + 20, static_cast<Index>(options.max_iterations) * k));
  Eigen::MatrixXd q(n, std::min<Index>(max_dim, 2 * k + 40));
  std::vector<double> alpha, beta;

  auto orthogonalize = [&](Eigen::VectorXd& w, Index cols) {
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd mw = masses.cwiseProduct(w);
      const Eigen::VectorXd coeffs = q.leftCols(cols).transpose() * mw;
      w.noalias() -= q.leftCols(cols) * coeffs;
    }
  };

  Eigen::VectorXd v = random_vector();
  v /= m_norm(v);
  q.col(0) = v;
  Index dim = 0;
  Index next_check = std::min<Index>(max_dim, k + std::max<Index>(20, k / 2));
  Eigen::VectorXd theta;
  Eigen::MatrixXd ritz;

  while (true) {
    const Index j = dim;
    Eigen::VectorXd w = apply(q.col(j));
    const double a = q.col(j).dot(masses.cwiseProduct(w));
    alpha.push_back(a);
    w -= a * q.col(j);
    if (j > 0) w -= beta[static_cast<size_t>(j - 1)] * q.col(j - 1);
    orthogonalize(w, j + 1);
    double b = m_norm(w);
    dim = j + 1;

    const bool full = dim >= max_dim;
    if (dim >= next_check || full) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
      for (Index i = 0; i < dim; ++i) {
        t(i, i) = alpha[static_cast<size_t>(i)];
        if (i + 1 < dim) t(i, i + 1) = t(i + 1, i) = beta[static_cast<size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri(t);
      theta = tri.eigenvalues().reverse().head(std::min(k, dim));
      ritz = tri.eigenvectors().rowwise().reverse().leftCols(std::min(k, dim));
      bool converged = dim >= k;
      for (Index i = 0; converged && i < k; ++i)
        if (std::abs(b * ritz(dim - 1, i)) > options.tolerance * std::abs(theta[i])) converged = false;
      if (converged || full) {
        if (!converged) {
          if (dim < n) throw SolverFailure("Lanczos did not converge within " + std::to_string(dim) + " vectors");
        }
        break;
      }
      next_check = std::min<Index>(max_dim, dim + std::max<Index>(10, dim / 4));
    }

    if (b < 1e-12 * std::abs(a) || b == 0.0) {
      // Invariant subspace found; continue from a fresh orthogonal direction.
      w = random_vector();
      orthogonalize(w, dim);
      b = 0.0;
      w /= m_norm(w);
    } else {
      w /= b;
    }
    beta.push_back(b);
    if (dim >= q.cols()) q.conservativeResize(Eigen::NoChange, std::min<Index>(max_dim, 2 * q.cols()));
    q.col(dim) = w;
  }

  Eigen::MatrixXd vectors = q.leftCols(dim) * ritz;
  // Re-orthonormalize in M and refresh the eigenvalues with Rayleigh quotients.
  SpectralBasis basis;
  basis.eigenvalues.resize(k);
  for (Index i = 0; i < k; ++i) {
    Eigen::VectorXd col = vectors.col(i);
    for (Index p = 0; p < i; ++p) col -= vectors.col(p).dot(masses.cwiseProduct(col)) * vectors.col(p);
    col /= m_norm(col);
    vectors.col(i) = col;
    basis.eigenvalues[i] = col.dot(stiffness * col);
  }
  // Ritz order follows theta; sort by the refined eigenvalue to be safe.
  std::vector<Index> order(static_cast<size_t>(k));
  for (Index i = 0; i < k; ++i) order[static_cast<size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Index l, Index r) { return basis.eigenvalues[l] < basis.eigenvalues[r]; });
  basis.eigenvectors.resize(n, k);
  Eigen::VectorXd sorted(k);
  for (Index i = 0; i < k; ++i) {
    basis.eigenvectors.col(i) = vectors.col(order[static_cast<size_t>(i)]);
    sorted[i] = basis.eigenvalues[order[static_cast<size_t>(i)]];
  }
  basis.eigenvalues = sorted;
  basis.masses = masses;
  clamp_eigenvalues(basis.eigenvalues);
  return basis;
}

SpectralBasis compute_basis(const TriMesh& mesh, Index k_total, const EigenOptions& options) {
  const Index n = mesh.num_vertices();
  check_request(n, k_total);
  const bool dense = !options.force_sparse && (n <= options.dense_threshold || 4 * k_total > n);
  SpectralBasis basis = dense ? solve_pencil_dense(mesh.stiffness, mesh.vertex_masses, k_total)
                              : solve_pencil_lanczos(mesh.stiffness, mesh.vertex_masses, k_total, options);
  if (!basis.eigenvectors.allFinite()) throw SolverFailure("eigensolver produced non-finite vectors");
  fix_signs(basis);
  return basis;
}

}  // namespace shells
