#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "gsblow/fit.hpp"
#include "gsblow/grid.hpp"
#include "gsblow/hypotheses.hpp"
#include "gsblow/potential.hpp"

using namespace gsblow;

TEST(Grid, SpacingIsRmaxOverNPlusOne) {
  for (auto geom : {Geometry::radial(3), Geometry::cartesian(1), Geometry::cartesian(2)}) {
    Grid g(geom, 4.0, 19);
    EXPECT_DOUBLE_EQ(g.h(), 0.2);
  }
}

TEST(Grid, RadialNodesExcludeOriginAndBoundary) {
  Grid g(Geometry::radial(2), 10.0, 99);
  EXPECT_DOUBLE_EQ(g.axis()[0], 0.1);
  EXPECT_NEAR(g.axis()[98], 9.9, 1e-12);
  EXPECT_EQ(g.size(), 99u);
}

TEST(Grid, CartesianBoxIsSymmetric) {
  Grid g(Geometry::cartesian(1), 6.0, 40);
  for (std::size_t k = 0; k < 40; ++k)
    EXPECT_NEAR(g.coordinate(k, 0), -g.coordinate(39 - k, 0), 1e-13);
  Grid g2(Geometry::cartesian(2), 6.0, 20);
  EXPECT_EQ(g2.size(), 400u);
  EXPECT_DOUBLE_EQ(g2.coordinate(21, 0), g2.axis()[1]);
  EXPECT_DOUBLE_EQ(g2.coordinate(21, 1), g2.axis()[1]);
}

TEST(Grid, RadialQuadratureRecoversBallMeasure) {
  // integral of r^2 over (0, 12) is 12^3 / 3
  Grid g(Geometry::radial(3), 12.0, 4000);
  EXPECT_NEAR(g.weights().sum() / (12.0 * 12.0 * 12.0 / 3.0), 1.0, 2e-3);
}

TEST(Grid, CartesianWeightsAreCellVolumes) {
  Grid g(Geometry::cartesian(2), 5.0, 24);
  EXPECT_NEAR(g.weights()[7], g.h() * g.h(), 1e-15);
  EXPECT_NEAR(g.weights().sum(), std::pow(24 * g.h(), 2), 1e-12);
}

TEST(Grid, RejectsBadParameters) {
  EXPECT_THROW(Grid(Geometry::cartesian(1), 1.0, 15), InvalidArgument);
  EXPECT_THROW(Grid(Geometry::cartesian(1), 0.0, 64), InvalidArgument);
  EXPECT_THROW(Grid(Geometry::cartesian(3), 1.0, 64), InvalidArgument);
  EXPECT_THROW(Grid(Geometry::radial(0), 1.0, 64), InvalidArgument);
}

TEST(Grid, WeightedInnerProduct) {
  Grid g(Geometry::cartesian(1), 2.0, 19);
  Vector one = Vector::Ones(19);
  EXPECT_NEAR(weighted_dot(g.weights(), one, one), 19 * 0.1, 1e-14);
  EXPECT_NEAR(weighted_norm(g.weights(), one), std::sqrt(1.9), 1e-14);
}

TEST(Potential, ClosedFormKinds) {
  EXPECT_DOUBLE_EQ(PotentialSpec::power(4.0, 0.5, 1.0).radial(2.0), 9.0);
  EXPECT_DOUBLE_EQ(PotentialSpec::polynomial({1.0, 0.0, 1.0}).radial(3.0), 10.0);
  EXPECT_NEAR(PotentialSpec::exponential(1.0, 2.0).radial(1.0), 2.0 * std::exp(1.0), 1e-14);
  EXPECT_DOUBLE_EQ(PotentialSpec::zero().radial(5.0), 0.0);
}

TEST(Potential, ScaleShiftAndInverseSquare) {
  const auto q = PotentialSpec::power(2.0).scaled(3.0).shifted(1.0);
  EXPECT_DOUBLE_EQ(q.radial(2.0), 13.0);
  EXPECT_DOUBLE_EQ(PotentialSpec::zero().with_inverse_square(0.75).radial(0.5), 3.0);
}

TEST(Potential, TabulatedInterpolatesAndExtrapolates) {
  const auto t = PotentialSpec::tabulated({1.0, 2.0, 4.0}, {1.0, 4.0, 16.0});
  EXPECT_DOUBLE_EQ(t.radial(1.5), 2.5);
  EXPECT_DOUBLE_EQ(t.radial(0.5), 1.0);
  // continuation of the last two samples as a power law (r^2 here)
  EXPECT_NEAR(t.radial(8.0), 64.0, 1e-10);
}

TEST(Potential, PerturbedIsNotRadial) {
  const auto q = PotentialSpec::perturbed(PotentialSpec::power(4.0), 0.1);
  EXPECT_FALSE(q.is_radial());
  EXPECT_THROW(q.radial(1.0), InvalidArgument);
  EXPECT_NEAR(q.at(1.0), 1.0 + 0.1 * std::sin(1.0), 1e-14);
}

TEST(Potential, LoadsTwoColumnTable) {
  const auto path = std::filesystem::temp_directory_path() / "gsblow_table_test.csv";
  {
    std::ofstream out(path);
    out << "r,q\n0.5,1\n1,2\n2,8\n";
  }
  const auto q = load_tabulated(path.string());
  EXPECT_DOUBLE_EQ(q.radial(1.5), 5.0);
  std::filesystem::remove(path);
  EXPECT_THROW(load_tabulated("/nonexistent/table.csv"), InvalidArgument);
}

TEST(Fit, LogLogRecoversPowerLaw) {
  std::vector<double> x, y;
  for (int k = 1; k <= 6; ++k) {
    x.push_back(std::pow(10.0, -k));
    y.push_back(3.0 * std::pow(x.back(), -1.5));
  }
  const auto f = loglog_fit(x, y);
  EXPECT_NEAR(f.exponent, -1.5, 1e-12);
  EXPECT_NEAR(f.prefactor, 3.0, 1e-10);
}

class ClassP : public ::testing::Test {
 protected:
  Grid grid{Geometry::radial(1), 40.0, 2000};
};

TEST_F(ClassP, QuarticIsMember) {
  const auto r = check_class_P(PotentialSpec::power(4.0), grid, 1.0);
  EXPECT_TRUE(r.member);
  EXPECT_NEAR(r.tail_exponent, 4.0, 1e-9);
  // integral of r^{-2} from 1 to infinity
  EXPECT_NEAR(r.tail_integral, 1.0, 1e-3);
}

TEST_F(ClassP, HarmonicGrowthIsNotEnough) {
  EXPECT_FALSE(check_class_P(PotentialSpec::power(2.0), grid, 1.0).member);
  EXPECT_FALSE(check_class_P(PotentialSpec::polynomial({1.0, 0.0, 1.0}), grid, 1.0).member);
}

TEST_F(ClassP, BorderlineLogarithmicGrowthIsRejected) {
  std::vector<double> r, v;
  for (double s = 0.5; s <= 45.0; s += 0.01) {
    r.push_back(s);
    v.push_back(s * s * std::log(s + 2.0));
  }
  const auto rep = check_class_P(PotentialSpec::tabulated(r, v), grid, 1.0);
  EXPECT_FALSE(rep.member);
}

TEST_F(ClassP, ExponentialGrowthIsMember) {
  Grid short_grid(Geometry::radial(1), 20.0, 1000);
  const auto rep = check_class_P(PotentialSpec::exponential(1.0), short_grid, 1.0);
  EXPECT_TRUE(rep.member);
}

TEST_F(ClassP, DecreasingProfileFailsMonotonicity) {
  const auto rep = check_class_P(PotentialSpec::power(-1.0, 1.0, 1.0), grid, 1.0);
  EXPECT_FALSE(rep.monotone_ok);
  EXPECT_FALSE(rep.member);
}

TEST_F(ClassP, NonPositiveProfileIsAHypothesisError) {
  EXPECT_THROW(check_class_P(PotentialSpec::power(2.0, 1.0, -1.0), grid, 1.0), HypothesisError);
  EXPECT_THROW(check_class_P(PotentialSpec::power(4.0), grid, 30.0), InvalidArgument);
}

TEST(Sandwich, IdenticalBoundsHoldTrivially) {
  Grid grid(Geometry::radial(1), 10.0, 500);
  const auto q = PotentialSpec::power(4.0);
  const auto rep = check_sandwich(q, q, q, grid, 1.0);
  EXPECT_TRUE(rep.holds);
  EXPECT_DOUBLE_EQ(rep.C0, 1.0);
  EXPECT_DOUBLE_EQ(rep.perturbation_integral, 0.0);
}

TEST(Sandwich, ConstantMatchesBruteForceRatio) {
  Grid grid(Geometry::cartesian(1), 10.0, 400);
  const auto q = PotentialSpec::perturbed(PotentialSpec::power(4.0), 0.1);
  const auto rep = check_sandwich(q, PotentialSpec::power(4.0, 0.9), PotentialSpec::power(4.0, 1.1),
                                  grid, 1.0);
  EXPECT_TRUE(rep.pointwise_ok);
  EXPECT_NEAR(rep.C0, 11.0 / 9.0, 1e-12);
  EXPECT_TRUE(rep.Q1_class_p);
  EXPECT_TRUE(rep.Q2_class_p);
}

TEST(Sandwich, ReportsOffendingNode) {
  Grid grid(Geometry::cartesian(1), 10.0, 400);
  const auto q = PotentialSpec::perturbed(PotentialSpec::power(4.0), 0.3);
  const auto rep = check_sandwich(q, PotentialSpec::power(4.0, 0.9), PotentialSpec::power(4.0, 1.1),
                                  grid, 1.0);
  EXPECT_FALSE(rep.pointwise_ok);
  EXPECT_FALSE(rep.holds);
  ASSERT_TRUE(rep.offending_node.has_value());
  const double x = grid.coordinate(*rep.offending_node, 0);
  const double qq = q.at(x);
  EXPECT_TRUE(qq < 0.9 * std::pow(x, 4) || qq > 1.1 * std::pow(x, 4));
}

TEST(Sandwich, ExponentiallyCloseBoundsGiveFiniteIntegral) {
  // Q2 - Q1 = e^{-r} decays, so the double integral converges
  Grid grid(Geometry::radial(1), 20.0, 2000);
  std::vector<double> r, v;
  for (double s = 0.01; s <= 25.0; s += 0.01) {
    r.push_back(s);
    v.push_back(std::pow(s, 4) + 1.0 + std::exp(-s));
  }
  const auto Q1 = PotentialSpec::power(4.0, 1.0, 1.0);
  const auto Q2 = PotentialSpec::tabulated(r, v);
  const auto rep = check_sandwich(Q1, Q1, Q2, grid, 1.0);
  EXPECT_TRUE(rep.integral_finite);
  EXPECT_TRUE(std::isfinite(rep.perturbation_integral));
}

TEST(Truncation, BoundaryPotentialMustDominate) {
  Grid grid(Geometry::radial(1), 4.0, 100);
  EXPECT_TRUE(truncation_ok(grid, PotentialSpec::power(4.0), 1.06));
  EXPECT_FALSE(truncation_ok(grid, PotentialSpec::power(4.0), 100.0));
}
