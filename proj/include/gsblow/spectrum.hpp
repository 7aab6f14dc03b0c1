#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "gsblow/error.hpp"
#include "gsblow/operator.hpp"

namespace gsblow {

/// Nodes where phi >= collar_floor * max(phi) form the collar; every
/// node-wise ratio against phi is taken there only.
inline constexpr double collar_floor = 1e-12;

inline std::vector<char> collar_mask(const Vector& phi) {
  const double cut = collar_floor * phi.maxCoeff();
  std::vector<char> mask(static_cast<std::size_t>(phi.size()));
  for (Eigen::Index i = 0; i < phi.size(); ++i) mask[static_cast<std::size_t>(i)] = phi[i] >= cut;
  return mask;
}

struct Eigenpair {
  double value = 0.0;
  /// Nodal values, normalized so that sum w_i v_i^2 = 1.
  Vector vector;
  /// ||L v - value v|| in the weighted norm.
  double residual = 0.0;
  int iterations = 0;
};

/// Principal eigenpair with phi > 0 at every node and ||phi|| = 1.
struct GroundState {
  double lambda1 = 0.0;
  Vector phi;
  double lambda2 = 0.0;
  /// Second eigenvector, same normalization (sign: positive sum).
  Vector phi2;
  double residual = 0.0;
  /// Quadrature weights of the grid the pair lives on.
  Vector weights;

  double gap() const { return lambda2 - lambda1; }
  double inner(const Vector& u, const Vector& v) const { return weighted_dot(weights, u, v); }
};

namespace detail {

/// Inverse iteration for the lowest eigenpair of T orthogonal to `locked`
/// (all in symmetrized coordinates, unit Euclidean norm).
///
/// Phase 1 runs with shift 0 until the relative residual drops below 1e-3.
/// Phase 2 shifts to rho - 2 ||r||, which stays below the target eigenvalue
/// (there is an eigenvalue within ||r|| of rho and rho bounds the target from
/// above), and keeps refreshing the shift as the residual falls. For the
/// unlocked ground state T - shift is then an M-matrix, so its LDL^T solve
/// maps a positive iterate to a positive iterate.
inline Eigenpair inverse_iteration(const Eigen::SparseMatrix<double>& T, Vector x,
                                   const std::vector<Vector>& locked, double tol,
                                   int max_iterations) {
  const auto n = T.rows();
  auto orthogonalize = [&](Vector& v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : locked) v -= q.dot(v) * q;
  };
  auto rayleigh = [&](const Vector& v, double& rho, double& res) {
    const Vector tv = T * v;
    rho = v.dot(tv);
    res = (tv - rho * v).norm();
  };

  orthogonalize(x);
  x.normalize();
  double rho = 0.0, res = 0.0;
  rayleigh(x, rho, res);

  Eigen::SparseMatrix<double> eye(n, n);
  eye.setIdentity();
  const bool positive_path = locked.empty();

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  auto factor = [&](double shift) {
    const Eigen::SparseMatrix<double> m = T - shift * eye;
    if (positive_path) {
      ldlt.compute(m);
      return ldlt.info() == Eigen::Success;
    }
    lu.compute(m);
    return lu.info() == Eigen::Success;
  };
  auto solve = [&](const Vector& b) -> Vector { return positive_path ? Vector(ldlt.solve(b)) : Vector(lu.solve(b)); };

  int it = 0;
  if (!factor(0.0)) throw ConvergenceError("eigensolver: factorization of T failed", res);
  while (it < max_iterations && res > 1e-3 * std::abs(rho) && res > tol) {
    x = solve(x);
    orthogonalize(x);
    x.normalize();
    rayleigh(x, rho, res);
    ++it;
  }

  double best = res;
  int stalls = 0;
  double shift = std::numeric_limits<double>::quiet_NaN();
  while (it < max_iterations && res > tol) {
    // the floor keeps the last LDL^T pivot well above rounding level
    const double next_shift = rho - std::max(2.0 * res, 1e-8 * std::max(1.0, std::abs(rho)));
    if (!(next_shift == shift)) {
      shift = next_shift;
      if (!factor(shift)) break;  // shift numerically on the eigenvalue: x is converged
    }
    Vector y = solve(x);
    if (!y.allFinite()) break;
    orthogonalize(y);
    y.normalize();
    double rho_y = 0.0, res_y = 0.0;
    rayleigh(y, rho_y, res_y);
    ++it;
    x = y;
    rho = rho_y;
    res = res_y;
    if (res < 0.5 * best) {
      best = res;
      stalls = 0;
    } else if (++stalls >= 4) {
      break;
    }
  }
  if (res > tol)
    throw ConvergenceError("eigensolver: residual " + std::to_string(res) + " above tolerance " +
                               std::to_string(tol) + " after " + std::to_string(it) + " iterations",
                           res);
  return {rho, x, res, it};
}

inline Vector start_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(gen);
  return v;
}

inline void fix_sign(Vector& v) {
  if (v.sum() < 0.0) v = -v;
}

}  // namespace detail

/// The k lowest eigenpairs of L, ascending, mutually orthogonal in the
/// weighted inner product. The first pair always starts from the all-positive
/// vector; the others are deflated runs from fixed pseudo-random starts.
inline std::vector<Eigenpair> lowest_k(const DiscreteOperator& op, int k, double tol = 1e-8,
                                       int max_iterations = 4000) {
  if (k < 1 || k > 8) throw InvalidArgument("lowest_k: need 1 <= k <= 8");
  if (!(tol > 0.0)) throw InvalidArgument("lowest_k: tolerance must be positive");
  const Eigen::SparseMatrix<double> T = op.symmetric_matrix();
  std::vector<Vector> locked;
  std::vector<Eigenpair> out;
  for (int j = 0; j < k; ++j) {
    Vector start = j == 0 ? op.sqrt_weights()
                          : detail::start_vector(op.size(), 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(j));
    Eigenpair p = detail::inverse_iteration(T, start, locked, tol, max_iterations);
    detail::fix_sign(p.vector);
    locked.push_back(p.vector);
    p.vector = op.from_symmetric(p.vector);
    out.push_back(std::move(p));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Eigenpair& a, const Eigenpair& b) { return a.value < b.value; });
  for (std::size_t j = 1; j < out.size(); ++j)
    if (out[j].value - out[j - 1].value < tol)
      std::clog << "gsblow: warning: eigenvalues " << out[j - 1].value << " and " << out[j].value
                << " are clustered below the tolerance spacing\n";
  return out;
}

/// Principal eigenpair plus the second eigenvalue.
inline GroundState ground_state(const DiscreteOperator& op, double tol = 1e-8) {
  auto pairs = lowest_k(op, 2, tol);
  GroundState gs;
  gs.lambda1 = pairs[0].value;
  gs.phi = std::move(pairs[0].vector);
  gs.residual = pairs[0].residual;
  gs.lambda2 = pairs[1].value;
  gs.phi2 = std::move(pairs[1].vector);
  gs.weights = op.grid().weights();

  if (!(gs.phi.minCoeff() > 0.0)) {
    Eigen::Index where = 0;
    gs.phi.minCoeff(&where);
    throw ConvergenceError("ground_state: converged vector is not positive (node " +
                               std::to_string(where) + "); wrong eigenpair or underflow at the "
                               "truncation boundary",
                           gs.residual);
  }
  if (std::abs(gs.lambda2 - gs.lambda1) < 1e-9 * std::abs(gs.lambda1))
    throw ConvergenceError("ground_state: principal eigenvalue is numerically not simple",
                           gs.residual);
  return gs;
}

struct DenseSpectrum {
  /// Ascending eigenvalues.
  Vector values;
  /// Columns are nodal eigenvectors, weighted-normalized, positive sum.
  Eigen::MatrixXd vectors;
};

/// Full spectrum of the symmetrized matrix by a dense symmetric eigensolver.
inline DenseSpectrum dense_oracle(const DiscreteOperator& op) {
  if (op.size() > max_dense_size)
    throw InvalidArgument("dense_oracle: refusing " + std::to_string(op.size()) +
                          " unknowns (limit " + std::to_string(max_dense_size) + ")");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.dense_symmetric());
  if (es.info() != Eigen::Success) throw Error("dense_oracle: eigensolver failed");
  DenseSpectrum out{es.eigenvalues(), es.eigenvectors()};
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) {
    Vector v = op.from_symmetric(out.vectors.col(j));
    detail::fix_sign(v);
    out.vectors.col(j) = v;
  }
  return out;
}

struct Comparability {
  double k1 = 0.0;
  double k2 = 0.0;
  bool holds = false;
  std::size_t nodes_used = 0;
};

/// Node-wise constants with k1 phi <= Phi1, Phi2 <= k2 phi over the nodes in
/// all three collars. Comparability is declared when 0 < k1 <= k2 and
/// k2 / k1 <= 1e12.
inline Comparability check_comparability(const GroundState& gs_q, const GroundState& gs_Q1,
                                         const GroundState& gs_Q2) {
  const auto n = gs_q.phi.size();
  if (gs_Q1.phi.size() != n || gs_Q2.phi.size() != n)
    throw InvalidArgument("check_comparability: ground states live on different grids");
  const auto c0 = collar_mask(gs_q.phi), c1 = collar_mask(gs_Q1.phi), c2 = collar_mask(gs_Q2.phi);
  Comparability out;
  out.k1 = std::numeric_limits<double>::infinity();
  out.k2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!c0[k] || !c1[k] || !c2[k]) continue;
    const double a = gs_Q1.phi[i] / gs_q.phi[i];
    const double b = gs_Q2.phi[i] / gs_q.phi[i];
    out.k1 = std::min({out.k1, a, b});
    out.k2 = std::max({out.k2, a, b});
    ++out.nodes_used;
  }
  out.holds = out.nodes_used > 0 && out.k1 > 0.0 && out.k1 <= out.k2 && out.k2 <= 1e12 * out.k1;
  return out;
}

}  // namespace gsblow
