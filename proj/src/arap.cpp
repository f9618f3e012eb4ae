#include "shells/alignment.hpp"

#include "shells/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include <cmath>
#include <string>

namespace shells {

ArapModel::ArapModel(const TriMesh& mesh) : num_vertices_(mesh.num_vertices()) {
  const SparseMatrix& s = mesh.stiffness;
  offsets_.assign(static_cast<size_t>(num_vertices_) + 1, 0);
  std::vector<Eigen::Triplet<double>> triplets;
  // Column-major storage of a symmetric matrix: column x lists the one-ring of x.
  for (Index x = 0; x < s.outerSize(); ++x) {
    for (SparseMatrix::InnerIterator it(s, x); it; ++it) {
      const Index y = it.row();
      if (y == x) continue;
      const double w = std::max(-it.value(), 0.0);
      edges_.push_back({x, y, w});
      if (w > 0.0) {
        triplets.emplace_back(x, y, -w);
        triplets.emplace_back(x, x, w);
      }
    }
    offsets_[static_cast<size_t>(x) + 1] = static_cast<Index>(edges_.size());
  }
  laplacian_.resize(num_vertices_, num_vertices_);
  laplacian_.setFromTriplets(triplets.begin(), triplets.end());
}

Eigen::MatrixXd ArapModel::gram(const Eigen::Ref<const Eigen::MatrixXd>& phi) const {
  const Eigen::MatrixXd lphi = laplacian_ * phi;
  return phi.transpose() * lphi;
}

ArapState identity_rotations(Index n) {
  ArapState state;
  state.rotations.assign(static_cast<size_t>(n), Eigen::Matrix3d::Identity());
  return state;
}

ArapState fit_rotations(const ArapModel& model, const Coords& rest, const Coords& deformed) {
  const Index n = model.num_vertices();
  if (rest.rows() != n || deformed.rows() != n) throw DimensionMismatch("ARAP coordinates do not match the mesh");
  ArapState state = identity_rotations(n);
  const auto& edges = model.edges();
  const auto& offsets = model.offsets();
#pragma omp parallel for schedule(static)
  for (Index x = 0; x < n; ++x) {
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (Index e = offsets[x]; e < offsets[x + 1]; ++e) {
      const auto& edge = edges[static_cast<size_t>(e)];
      const Eigen::Vector3d r = (rest.row(x) - rest.row(edge.to)).transpose();
      const Eigen::Vector3d d = (deformed.row(x) - deformed.row(edge.to)).transpose();
      cov.noalias() += edge.weight * r * d.transpose();
    }
    if (cov.squaredNorm() == 0.0) continue;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    if ((v * u.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    state.rotations[static_cast<size_t>(x)] = v * u.transpose();
  }
  return state;
}

double arap_energy(const ArapModel& model, const Coords& rest, const Coords& deformed, const ArapState& state) {
  const Index n = model.num_vertices();
  if (rest.rows() != n || deformed.rows() != n) throw DimensionMismatch("ARAP coordinates do not match the mesh");
  if (static_cast<Index>(state.rotations.size()) != n) throw DimensionMismatch("one rotation per vertex expected");
  double sum = 0.0;
  for (const auto& edge : model.edges()) {
    const Eigen::Vector3d r = (rest.row(edge.from) - rest.row(edge.to)).transpose();
    const Eigen::Vector3d d = (deformed.row(edge.from) - deformed.row(edge.to)).transpose();
    sum += edge.weight * (state.rotations[static_cast<size_t>(edge.from)] * r - d).squaredNorm();
  }
  return sum;
}

Displacement resize_displacement(const Displacement& d, Index k) {
  Displacement out;
  out.tau = Eigen::MatrixX3d::Zero(k, 3);
  const Index keep = std::min(k, d.size());
  out.tau.topRows(keep) = d.tau.topRows(keep);
  return out;
}

namespace {

void check_problem(const DisplacementProblem& p, Index k) {
  if (p.model == nullptr) throw DimensionMismatch("displacement problem has no ARAP model");
  const Index n = p.model->num_vertices();
  if (p.phi.rows() != n || p.rest.rows() != n) throw DimensionMismatch("basis or rest shape does not match the mesh");
  if (p.phi.cols() != k)
    throw DimensionMismatch("displacement has " + std::to_string(k) + " rows, basis block has " +
                            std::to_string(p.phi.cols()) + " columns");
  if (p.map.size() != p.target.rows()) throw DimensionMismatch("point map does not cover the target");
  if (p.map.codomain_size != n) throw DimensionMismatch("point map codomain is not the source mesh");
}

// Sum over one-rings of w * ((R(x) - I) e_xy) scattered onto the edge ends:
// Z[x] += w r, Z[y] -= w r, so that Phi^T Z = sum w g^T r with g = Phi[x] - Phi[y].
Coords scatter_rotation_residual(const ArapModel& model, const Coords& rest, const ArapState& state) {
  Coords z = Coords::Zero(model.num_vertices(), 3);
  for (const auto& edge : model.edges()) {
    const Eigen::Vector3d e = (rest.row(edge.from) - rest.row(edge.to)).transpose();
    const Eigen::RowVector3d r = (edge.weight * (state.rotations[static_cast<size_t>(edge.from)] * e - e)).transpose();
    z.row(edge.from) += r;
    z.row(edge.to) -= r;
  }
  return z;
}

Eigen::MatrixX3d solve_symmetric(const Eigen::MatrixXd& h, const Eigen::MatrixX3d& rhs) {
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixX3d x = llt.solve(rhs);
    if (x.allFinite()) return x;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) throw SolverFailure("displacement normal equations could not be solved");
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(values.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(values.size());
  for (Index i = 0; i < values.size(); ++i)
    if (values[i] > cutoff) inv[i] = 1.0 / values[i];
  return eig.eigenvectors() * (inv.asDiagonal() * (eig.eigenvectors().transpose() * rhs));
}

}  // namespace

double displacement_objective(const DisplacementProblem& problem, const Eigen::MatrixX3d& tau, const ArapState& state) {
  check_problem(problem, tau.rows());
  const Coords deformed = problem.rest + problem.phi * tau;
  const double w2 = problem.xyz_weight * problem.xyz_weight;
  double data = 0.0;
  for (Index m = 0; m < problem.map.size(); ++m)
    data += (deformed.row(problem.map.assignments[static_cast<size_t>(m)]) - problem.target.row(m)).squaredNorm();
  double reg = 0.0;
  if (problem.lambda_arap != 0.0) reg = arap_energy(*problem.model, problem.rest, deformed, state);
  return w2 * data + problem.lambda_arap * reg;
}

Eigen::MatrixX3d displacement_gradient(const DisplacementProblem& problem, const Eigen::MatrixX3d& tau,
                                       const ArapState& state) {
  check_problem(problem, tau.rows());
  const Coords deformed = problem.rest + problem.phi * tau;
  const double w2 = problem.xyz_weight * problem.xyz_weight;
  Coords z = Coords::Zero(problem.rest.rows(), 3);
  for (Index m = 0; m < problem.map.size(); ++m) {
    const Index a = problem.map.assignments[static_cast<size_t>(m)];
    z.row(a) += 2.0 * w2 * (deformed.row(a) - problem.target.row(m));
  }
  if (problem.lambda_arap != 0.0) {
    // d/dX* of w ||R e - e*||^2 is -2 w (R e - e*) at x and +2 w (R e - e*) at y.
    for (const auto& edge : problem.model->edges()) {
      const Eigen::Vector3d e = (problem.rest.row(edge.from) - problem.rest.row(edge.to)).transpose();
      const Eigen::Vector3d d = (deformed.row(edge.from) - deformed.row(edge.to)).transpose();
      const Eigen::RowVector3d r =
          (2.0 * problem.lambda_arap * edge.weight * (state.rotations[static_cast<size_t>(edge.from)] * e - d)).transpose();
      z.row(edge.from) -= r;
      z.row(edge.to) += r;
    }
  }
  return problem.phi.transpose() * z;
}

DisplacementResult solve_displacement(const DisplacementProblem& problem, const Displacement& init) {
  const Index k = init.size();
  check_problem(problem, k);
  const Index n = problem.rest.rows();
  const double w2 = problem.xyz_weight * problem.xyz_weight;
  const double lambda = problem.lambda_arap;

  // Data part of the normal equations is fixed for the whole solve.
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
  Coords pulled = Coords::Zero(n, 3);
  for (Index m = 0; m < problem.map.size(); ++m) {
    const Index a = problem.map.assignments[static_cast<size_t>(m)];
    counts[a] += 1.0;
    pulled.row(a) += problem.target.row(m) - problem.rest.row(a);
  }
  Eigen::MatrixXd h = w2 * (problem.phi.transpose() * counts.asDiagonal() * problem.phi);
  const Eigen::MatrixX3d data_rhs = w2 * (problem.phi.transpose() * pulled);
  if (lambda != 0.0) {
    if (problem.arap_gram.rows() >= k)
      h += 2.0 * lambda * problem.arap_gram.topLeftCorner(k, k);
    else
      h += 2.0 * lambda * problem.model->gram(problem.phi);
  }

  DisplacementResult result;
  result.displacement.tau = init.tau;
  auto deformed_of = [&](const Eigen::MatrixX3d& tau) -> Coords { return problem.rest + problem.phi * tau; };
  result.rotations = lambda != 0.0 ? fit_rotations(*problem.model, problem.rest, deformed_of(init.tau))
                                   : identity_rotations(n);
  double energy = displacement_objective(problem, result.displacement.tau, result.rotations);
  if (!std::isfinite(energy)) throw SolverFailure("displacement energy is not finite at the initial state");
  result.energies.push_back(energy);

  const int iterations = lambda != 0.0 ? problem.max_iterations : 1;
  for (int it = 0; it < iterations; ++it) {
    Eigen::MatrixX3d rhs = data_rhs;
    if (lambda != 0.0) rhs += lambda * (problem.phi.transpose() * scatter_rotation_residual(*problem.model, problem.rest, result.rotations));
    Eigen::MatrixX3d tau = solve_symmetric(h, rhs);
    if (!tau.allFinite()) throw SolverFailure("displacement solve produced non-finite coefficients");
    ArapState rotations =
        lambda != 0.0 ? fit_rotations(*problem.model, problem.rest, deformed_of(tau)) : result.rotations;
    const double next = displacement_objective(problem, tau, rotations);
    if (!std::isfinite(next)) throw SolverFailure("displacement energy became non-finite");
    result.displacement.tau = std::move(tau);
    result.rotations = std::move(rotations);
    result.energies.push_back(next);
    const double decrease = energy - next;
    energy = next;
    if (decrease <= problem.tolerance * std::max(energy + decrease, 1e-300)) break;
  }
  return result;
}

EnergyTerms total_energy(const ProductEmbedding& source_morphed, const ProductEmbedding& target, const PointMap& map,
                         const Eigen::MatrixXd& c, const FeatureTerm* features, double lambda_feat,
                         const ArapModel* model, const Coords& rest, const Coords& deformed, double lambda_arap) {
  EnergyTerms terms;
  terms.alignment = alignment_energy(source_morphed, target, map);
  if (features != nullptr && lambda_feat != 0.0) terms.feature = feature_energy(c, *features);
  if (model != nullptr && lambda_arap != 0.0)
    terms.arap = arap_energy(*model, rest, deformed, fit_rotations(*model, rest, deformed));
  terms.total = terms.alignment + lambda_feat * terms.feature + lambda_arap * terms.arap;
  return terms;
}

}  // namespace shells
