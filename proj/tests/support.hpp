#pragma once

#include <cmath>
#include <random>

#include "gsblow/grid.hpp"
#include "gsblow/operator.hpp"
#include "gsblow/potential.hpp"
#include "gsblow/spectrum.hpp"

namespace gsblow::testing {

/// -u'' + x^4 u on [-4, 4]: ground state well resolved, collar reaches the edge.
struct Quartic {
  Grid grid;
  DiscreteOperator op;
  GroundState gs;

  explicit Quartic(std::size_t n = 200, double r_max = 8.0)
      : grid(Geometry::cartesian(1), r_max, n),
        op(assemble(grid, PotentialSpec::power(4.0))),
        gs(ground_state(op)) {}
};

inline Vector gaussian(const Grid& grid, double center, double width, double amplitude = 1.0) {
  Vector g(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double x = grid.coordinate(k, 0) - center;
    g[static_cast<Eigen::Index>(k)] = amplitude * std::exp(-x * x / (2.0 * width * width));
  }
  return g;
}

inline double relative_x_diff(const Vector& a, const Vector& b, const Vector& phi) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]) / phi[i]);
    den = std::max(den, std::abs(b[i]) / phi[i]);
  }
  return num / den;
}

}  // namespace gsblow::testing
