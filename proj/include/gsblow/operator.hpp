#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gsblow/error.hpp"
#include "gsblow/grid.hpp"
#include "gsblow/potential.hpp"

namespace gsblow {

inline constexpr std::size_t max_dense_size = 512;

/// Effective 1D potential of the radial problem after the substitution
/// w = r^{(N-1)/2} u:  Q_eff(r) = Q(r) + (N-1)(N-3) / (4 r^2).
inline PotentialSpec radial_reduce(int N, const PotentialSpec& Q) {
  if (N < 1) throw InvalidArgument("radial_reduce: dimension must be >= 1");
  if (!Q.is_radial()) throw InvalidArgument("radial_reduce: potential must be radial");
  const double correction = 0.25 * static_cast<double>((N - 1) * (N - 3));
  return Q.with_inverse_square(Q.inverse_square() + correction);
}

/// One symmetric off-diagonal band of the symmetrized operator:
/// T(i, i + offset) = T(i + offset, i) = values[i].
struct Band {
  std::size_t offset = 1;
  Vector values;
};

/// Second-order finite-difference discretization of L = -Laplacian + q with
/// homogeneous Dirichlet data outside the grid.
///
/// The operator is stored in its symmetrized form T = W^{1/2} L W^{-1/2}
/// (W the quadrature weights) as a diagonal plus symmetric bands. L itself is
/// self-adjoint for the weighted inner product; apply() returns L u.
class DiscreteOperator {
 public:
  DiscreteOperator(Grid grid, Vector potential, Vector diag, std::vector<Band> bands)
      : grid_(std::move(grid)),
        potential_(std::move(potential)),
        diag_(std::move(diag)),
        bands_(std::move(bands)) {
    sqrt_w_ = grid_.weights().array().sqrt();
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  /// Effective potential at the nodes (includes the radial correction).
  const Vector& potential() const { return potential_; }
  const Vector& diag() const { return diag_; }
  const std::vector<Band>& offdiag() const { return bands_; }
  bool symmetric_form() const { return true; }
  const Vector& sqrt_weights() const { return sqrt_w_; }

  /// v -> T v
  Vector apply_symmetric(const Vector& v) const {
    check_length(v);
    Vector out = diag_.cwiseProduct(v);
    for (const Band& b : bands_) {
      const auto m = static_cast<Eigen::Index>(size() - b.offset);
      const auto o = static_cast<Eigen::Index>(b.offset);
      out.head(m) += b.values.head(m).cwiseProduct(v.segment(o, m));
      out.segment(o, m) += b.values.head(m).cwiseProduct(v.head(m));
    }
    return out;
  }

  /// u -> L u
  Vector apply(const Vector& u) const {
    check_length(u);
    return apply_symmetric(to_symmetric(u)).cwiseQuotient(sqrt_w_);
  }

  Vector to_symmetric(const Vector& u) const { return u.cwiseProduct(sqrt_w_); }
  Vector from_symmetric(const Vector& v) const { return v.cwiseQuotient(sqrt_w_); }

  Eigen::SparseMatrix<double> symmetric_matrix() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(size() * (1 + 2 * bands_.size()));
    const auto n = static_cast<Eigen::Index>(size());
    for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(i, i, diag_[i]);
    for (const Band& b : bands_) {
      const auto o = static_cast<Eigen::Index>(b.offset);
      for (Eigen::Index i = 0; i + o < n; ++i) {
        if (b.values[i] == 0.0) continue;
        t.emplace_back(i, i + o, b.values[i]);
        t.emplace_back(i + o, i, b.values[i]);
      }
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }

  /// Dense T; only for small grids (verification path).
  Eigen::MatrixXd dense_symmetric() const {
    require_small("dense_symmetric");
    return Eigen::MatrixXd(symmetric_matrix());
  }

  /// Dense L acting on nodal values; only for small grids.
  Eigen::MatrixXd dense() const {
    require_small("dense");
    Eigen::MatrixXd t = dense_symmetric();
    return sqrt_w_.cwiseInverse().asDiagonal() * t * sqrt_w_.asDiagonal();
  }

 private:
  void check_length(const Vector& v) const {
    if (static_cast<std::size_t>(v.size()) != size())
      throw InvalidArgument("operator: vector length " + std::to_string(v.size()) +
                            " does not match grid size " + std::to_string(size()));
  }
  void require_small(const char* what) const {
    if (size() > max_dense_size)
      throw InvalidArgument(std::string(what) + ": dense materialization limited to " +
                            std::to_string(max_dense_size) + " unknowns");
  }

  Grid grid_;
  Vector potential_;
  Vector diag_;
  std::vector<Band> bands_;
  Vector sqrt_w_;
};

/// Assembles -Laplacian + q on `grid`.
///
/// Cartesian grids use the standard 3- or 5-point stencil. Radial grids use
/// the reduced form -w'' + Q_eff w with w = r^{(N-1)/2} u and w = 0 at the
/// origin (first node at r = h). For N = 2 the correction -1/(4 r^2) is
/// largest at r = h, so the smallest diagonal entry scales like 1.75 / h^2.
inline DiscreteOperator assemble(const Grid& grid, const PotentialSpec& q) {
  const bool radial = grid.geometry().is_radial();
  if (radial && !q.is_radial())
    throw InvalidArgument("assemble: non-radial potential " + q.describe() + " on a " +
                          grid.geometry().describe() + " grid");
  const PotentialSpec effective = radial ? radial_reduce(grid.geometry().dim, q) : q;

  const auto size = static_cast<Eigen::Index>(grid.size());
  Vector pot(size);
  for (Eigen::Index k = 0; k < size; ++k) {
    const double raw = q.at_node(grid, static_cast<std::size_t>(k));
    if (!(raw >= 0.0) || !std::isfinite(raw))
      throw HypothesisError("assemble: potential " + q.describe() +
                            " is negative or not finite at node " + std::to_string(k));
    pot[k] = effective.at_node(grid, static_cast<std::size_t>(k));
  }

  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  const int d = radial ? 1 : grid.geometry().dim;
  Vector diag = pot.array() + 2.0 * d * inv_h2;

  std::vector<Band> bands;
  Band x{1, Vector::Constant(size, -inv_h2)};
  if (d == 2) {
    const auto n = static_cast<Eigen::Index>(grid.n());
    for (Eigen::Index k = n - 1; k < size; k += n) x.values[k] = 0.0;  // no coupling across rows
    bands.push_back(std::move(x));
    bands.push_back(Band{grid.n(), Vector::Constant(size, -inv_h2)});
  } else {
    bands.push_back(std::move(x));
  }
  return DiscreteOperator(grid, std::move(pot), std::move(diag), std::move(bands));
}

inline Vector apply(const DiscreteOperator& op, const Vector& v) { return op.apply(v); }

/// Writes L (acting on nodal values) as a MatrixMarket coordinate file.
/// The quadrature weights follow as comment lines so that the weighted
/// symmetry can be checked externally.
inline void write_matrix_market(const DiscreteOperator& op, std::ostream& os) {
  const Eigen::SparseMatrix<double> t = op.symmetric_matrix();
  const Vector& s = op.sqrt_weights();
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << "% -Laplacian + q on " << op.grid().geometry().describe() << ", n = " << op.grid().n()
     << ", r_max = " << op.grid().r_max() << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", s[i] * s[i]);
    os << "% weight " << (i + 1) << " " << buf << "\n";
  }
  os << t.rows() << " " << t.cols() << " " << t.nonZeros() << "\n";
  for (Eigen::Index c = 0; c < t.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(t, c); it; ++it) {
      const double v = it.value() * s[it.col()] / s[it.row()];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << (it.row() + 1) << " " << (it.col() + 1) << " " << buf << "\n";
    }
}

}  // namespace gsblow
