#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsblow/error.hpp"

namespace gsblow {

using Vector = Eigen::VectorXd;

enum class GeometryKind { radial, cartesian };

/// Either the radial profile of an N-dimensional problem or a Cartesian box
/// of dimension 1 or 2.
struct Geometry {
  GeometryKind kind = GeometryKind::cartesian;
  int dim = 1;

  static Geometry radial(int N) { return {GeometryKind::radial, N}; }
  static Geometry cartesian(int d) { return {GeometryKind::cartesian, d}; }

  bool is_radial() const { return kind == GeometryKind::radial; }

  std::string describe() const {
    return (is_radial() ? "radial(" : "cartesian(") + std::to_string(dim) + ")";
  }
};

inline constexpr std::size_t min_grid_points = 16;

/// Uniform interior grid with Dirichlet closure.
///
/// Spacing is h = r_max / (n + 1) in every geometry. Radial grids hold the
/// nodes r_i = i h, i = 1..n (origin excluded, r_max is the Dirichlet
/// boundary). Cartesian grids hold n nodes per axis on the symmetric box
/// [-r_max/2, r_max/2]^d, so r_max is the box width there.
///
/// Weights are the composite trapezoid weights of the interior nodes; the
/// boundary nodes carry zero data and therefore drop out. Radial weights
/// include the r^{N-1} measure factor.
class Grid {
 public:
  Grid(Geometry geometry, double r_max, std::size_t n)
      : geometry_(geometry), r_max_(r_max), n_(n) {
    if (!(r_max > 0.0) || !std::isfinite(r_max))
      throw InvalidArgument("grid: r_max must be positive and finite");
    if (n < min_grid_points)
      throw InvalidArgument("grid: need at least " + std::to_string(min_grid_points) +
                            " points per axis, got " + std::to_string(n));
    if (geometry.is_radial()) {
      if (geometry.dim < 1) throw InvalidArgument("grid: radial dimension must be >= 1");
    } else if (geometry.dim < 1 || geometry.dim > 2) {
      throw InvalidArgument("grid: cartesian grids support dimension 1 or 2, got " +
                            std::to_string(geometry.dim));
    }

    h_ = r_max / static_cast<double>(n + 1);
    axis_.resize(static_cast<Eigen::Index>(n));
    const double origin = geometry.is_radial() ? 0.0 : -0.5 * r_max;
    for (std::size_t i = 0; i < n; ++i)
      axis_[static_cast<Eigen::Index>(i)] = origin + static_cast<double>(i + 1) * h_;

    const std::size_t total = geometry.is_radial() || geometry.dim == 1 ? n : n * n;
    weights_.resize(static_cast<Eigen::Index>(total));
    if (geometry.is_radial()) {
      for (std::size_t i = 0; i < n; ++i) {
        const double r = axis_[static_cast<Eigen::Index>(i)];
        weights_[static_cast<Eigen::Index>(i)] = h_ * std::pow(r, geometry.dim - 1);
      }
    } else {
      weights_.setConstant(std::pow(h_, geometry.dim));
    }
  }

  const Geometry& geometry() const { return geometry_; }
  double r_max() const { return r_max_; }
  /// Points per axis.
  std::size_t n() const { return n_; }
  double h() const { return h_; }
  /// Total number of unknowns.
  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  const Vector& axis() const { return axis_; }
  const Vector& weights() const { return weights_; }

  /// Distance from the boundary of the truncated domain to the origin.
  double outer_radius() const { return geometry_.is_radial() ? r_max_ : 0.5 * r_max_; }

  /// Coordinate of node k along axis 0 or 1. Radial grids only have axis 0 (r).
  double coordinate(std::size_t k, int axis) const {
    if (geometry_.is_radial() || geometry_.dim == 1) return axis_[static_cast<Eigen::Index>(k)];
    const std::size_t i = axis == 0 ? k % n_ : k / n_;
    return axis_[static_cast<Eigen::Index>(i)];
  }

  /// |x| of node k.
  double radius(std::size_t k) const {
    if (geometry_.is_radial()) return axis_[static_cast<Eigen::Index>(k)];
    if (geometry_.dim == 1) return std::abs(coordinate(k, 0));
    return std::hypot(coordinate(k, 0), coordinate(k, 1));
  }

  /// Strictly positive radii on which a radial profile is sampled for the
  /// hypothesis checks: the radial nodes, or the positive half of a Cartesian axis.
  std::vector<double> radial_abscissae() const {
    std::vector<double> r;
    for (Eigen::Index i = 0; i < axis_.size(); ++i)
      if (axis_[i] > 0.0) r.push_back(axis_[i]);
    return r;
  }

 private:
  Geometry geometry_;
  double r_max_;
  std::size_t n_;
  double h_ = 0.0;
  Vector axis_;
  Vector weights_;
};

inline Grid build_grid(Geometry geometry, double r_max, std::size_t n) {
  return Grid(geometry, r_max, n);
}

/// Discrete L2 inner product with the grid's quadrature weights.
inline double weighted_dot(const Vector& w, const Vector& u, const Vector& v) {
  return (w.array() * u.array() * v.array()).sum();
}

inline double weighted_norm(const Vector& w, const Vector& u) {
  return std::sqrt(weighted_dot(w, u, u));
}

}  // namespace gsblow
