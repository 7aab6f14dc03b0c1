#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "gsblow/operator.hpp"

using namespace gsblow;

namespace {

Vector random_vector(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = d(gen);
  return v;
}

}  // namespace

TEST(Assemble, FreeStencilIn1D) {
  Grid g(Geometry::cartesian(1), 4.0, 19);
  const auto op = assemble(g, PotentialSpec::zero());
  const double ih2 = 1.0 / (0.2 * 0.2);
  EXPECT_NEAR(op.diag()[5], 2.0 * ih2, 1e-10);
  ASSERT_EQ(op.offdiag().size(), 1u);
  EXPECT_NEAR(op.offdiag()[0].values[5], -ih2, 1e-10);
  const Eigen::MatrixXd L = op.dense();
  EXPECT_NEAR(L(5, 4), -ih2, 1e-10);
  EXPECT_NEAR(L(5, 6), -ih2, 1e-10);
  EXPECT_EQ(L(5, 7), 0.0);
}

TEST(Assemble, PlaneStencilDoesNotWrapRows) {
  Grid g(Geometry::cartesian(2), 4.0, 16);
  const auto op = assemble(g, PotentialSpec::power(2.0));
  const Eigen::MatrixXd L = op.dense();
  EXPECT_EQ(L(15, 16), 0.0);
  EXPECT_EQ(L(16, 15), 0.0);
  EXPECT_NE(L(14, 15), 0.0);
  EXPECT_NE(L(0, 16), 0.0);
  EXPECT_NEAR(L(17, 17), 4.0 / (g.h() * g.h()) + std::pow(g.radius(17), 2), 1e-10);
}

TEST(Assemble, RadialDiagonalCarriesCentrifugalCorrection) {
  Grid g(Geometry::radial(5), 5.0, 49);
  const auto op = assemble(g, PotentialSpec::zero());
  // (N-1)(N-3)/4 = 2 for N = 5
  const double r = g.axis()[3];
  EXPECT_NEAR(op.diag()[3], 2.0 / (g.h() * g.h()) + 2.0 / (r * r), 1e-9);
}

TEST(Assemble, RejectsNonRadialPotentialOnRadialGrid) {
  Grid g(Geometry::radial(3), 5.0, 49);
  EXPECT_THROW(assemble(g, PotentialSpec::perturbed(PotentialSpec::power(4.0), 0.1)),
               InvalidArgument);
}

TEST(Assemble, RejectsNegativePotential) {
  Grid g(Geometry::cartesian(1), 5.0, 49);
  EXPECT_THROW(assemble(g, PotentialSpec::power(2.0, 1.0, -1.0)), HypothesisError);
}

class WeightedSymmetry : public ::testing::TestWithParam<Geometry> {};

TEST_P(WeightedSymmetry, HoldsToRoundoff) {
  Grid g(GetParam(), 6.0, GetParam().dim == 2 && !GetParam().is_radial() ? 20 : 120);
  const auto op = assemble(g, PotentialSpec::power(4.0));
  const Vector& w = g.weights();
  for (unsigned s = 0; s < 5; ++s) {
    const Vector u = random_vector(g.size(), 2 * s), v = random_vector(g.size(), 2 * s + 1);
    const double lhs = weighted_dot(w, op.apply(u), v);
    const double rhs = weighted_dot(w, u, op.apply(v));
    const double scale = weighted_norm(w, op.apply(u)) * weighted_norm(w, v);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * scale);
  }
}

INSTANTIATE_TEST_SUITE_P(Geometries, WeightedSymmetry,
                         ::testing::Values(Geometry::cartesian(1), Geometry::cartesian(2),
                                           Geometry::radial(1), Geometry::radial(2),
                                           Geometry::radial(3)));

TEST(Apply, MatchesDenseMatrixAndIsLinear) {
  Grid g(Geometry::radial(3), 6.0, 100);
  const auto op = assemble(g, PotentialSpec::power(2.0));
  const Vector u = random_vector(g.size(), 7), v = random_vector(g.size(), 8);
  const Eigen::MatrixXd L = op.dense();
  EXPECT_LE((op.apply(u) - L * u).norm(), 1e-10 * (L * u).norm());
  const Vector combo = op.apply(Vector(2.0 * u - 3.0 * v));
  EXPECT_LE((combo - 2.0 * op.apply(u) + 3.0 * op.apply(v)).norm(), 1e-10 * combo.norm());
  EXPECT_LE((apply(op, u) - op.apply(u)).norm(), 0.0);
}

TEST(Apply, ShiftingThePotentialShiftsTheOperator) {
  Grid g(Geometry::cartesian(1), 6.0, 60);
  const auto a = assemble(g, PotentialSpec::power(2.0));
  const auto b = assemble(g, PotentialSpec::power(2.0).shifted(2.5));
  const Vector u = random_vector(g.size(), 3);
  EXPECT_LE((b.apply(u) - a.apply(u) - 2.5 * u).norm(), 1e-10 * u.norm());
}

TEST(Apply, RejectsWrongLength) {
  Grid g(Geometry::cartesian(1), 6.0, 60);
  const auto op = assemble(g, PotentialSpec::power(2.0));
  EXPECT_THROW(op.apply(Vector::Ones(59)), InvalidArgument);
}

TEST(Dense, RefusesLargeGrids) {
  Grid g(Geometry::cartesian(1), 6.0, 600);
  const auto op = assemble(g, PotentialSpec::power(2.0));
  EXPECT_THROW(op.dense(), InvalidArgument);
}

TEST(MatrixMarket, WritesHeaderWeightsAndEntries) {
  Grid g(Geometry::cartesian(1), 4.0, 19);
  const auto op = assemble(g, PotentialSpec::power(2.0));
  std::ostringstream os;
  write_matrix_market(op, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "%%MatrixMarket matrix coordinate real general");
  int weights = 0;
  while (std::getline(in, line) && line[0] == '%')
    if (line.rfind("% weight", 0) == 0) ++weights;
  EXPECT_EQ(weights, 19);
  std::istringstream dims(line);
  int rows = 0, cols = 0, nnz = 0;
  dims >> rows >> cols >> nnz;
  EXPECT_EQ(rows, 19);
  EXPECT_EQ(nnz, 19 + 2 * 18);
  const Eigen::MatrixXd L = op.dense();
  int i = 0, j = 0;
  double v = 0.0;
  int count = 0;
  while (in >> i >> j >> v) {
    EXPECT_DOUBLE_EQ(v, L(i - 1, j - 1));
    ++count;
  }
  EXPECT_EQ(count, nnz);
}
