#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gsblow/fit.hpp"
#include "gsblow/grid.hpp"
#include "gsblow/potential.hpp"

namespace gsblow {

/// The tail exponent must clear 2 by this much; r^2 itself sits on the
/// boundary and a fit of it lands within rounding of 2 from either side.
inline constexpr double class_p_exponent_margin = 1e-3;
/// A falling local exponent whose extrapolated limit lands within this band
/// above 2 is treated as logarithmic growth on top of r^2 (finite windows bias
/// the extrapolation upwards by a few hundredths).
inline constexpr double borderline_exponent_band = 0.1;

/// Numerical verdict on membership of a radial profile Q in the class of
/// eventually increasing potentials with integrable Q^{-1/2} at infinity.
struct ClassPReport {
  double R0 = 0.0;
  bool monotone_ok = false;
  /// Trapezoid value of the integral of Q^{-1/2} over [R0, outer radius] plus
  /// the power-law tail beyond it; +inf when the fitted tail diverges.
  double tail_integral = 0.0;
  /// Least-squares exponent p of Q(r) ~ c r^p on the outer half of the grid.
  double tail_exponent = 0.0;
  /// Local exponent still increasing past 2 at the outer edge (e.g. e^r).
  bool superpolynomial = false;
  /// Local exponent decreasing towards a limit <= 2 (r^2 log r and friends).
  bool borderline = false;
  bool member = false;
};

struct SandwichReport {
  PotentialSpec Q1 = PotentialSpec::zero();
  PotentialSpec Q2 = PotentialSpec::zero();
  double C0 = 0.0;
  double R0 = 0.0;
  bool pointwise_ok = false;
  bool Q1_class_p = false;
  bool Q2_class_p = false;
  /// Double integral on [R0, outer radius] only.
  double truncated_integral = 0.0;
  /// Fitted growth exponent of the outer integrand (s -> (Q2 - Q1)(s) * inner(s)).
  double integrand_exponent = 0.0;
  bool integral_finite = false;
  /// truncated_integral plus the extrapolated tail; +inf when the tail diverges.
  double perturbation_integral = 0.0;
  bool holds = false;
  std::optional<std::size_t> offending_node;
  std::string diagnostic;
};

namespace detail {

struct RadialSamples {
  std::vector<double> r;
  std::vector<double> q;
};

inline RadialSamples sample_from(const PotentialSpec& Q, const Grid& grid, double R0) {
  if (!Q.is_radial())
    throw InvalidArgument("class-P check needs a radial profile, got " + Q.describe());
  RadialSamples s;
  for (double r : grid.radial_abscissae()) {
    if (r < R0) continue;
    const double v = Q.radial(r);
    if (!(v > 0.0) || !std::isfinite(v))
      throw HypothesisError("potential " + Q.describe() + " is not strictly positive at r = " +
                            std::to_string(r));
    if (s.r.empty() && R0 > 0.0 && r > R0) {
      // start the samples exactly at R0 so the tail integral covers [R0, r_1]
      const double v0 = Q.radial(R0);
      if (!(v0 > 0.0) || !std::isfinite(v0))
        throw HypothesisError("potential " + Q.describe() + " is not strictly positive at r = " +
                              std::to_string(R0));
      s.r.push_back(R0);
      s.q.push_back(v0);
    }
    s.r.push_back(r);
    s.q.push_back(v);
  }
  return s;
}

inline double local_exponent(const RadialSamples& s, std::size_t lo, std::size_t hi) {
  std::vector<double> lr, lq;
  for (std::size_t i = lo; i < hi; ++i) {
    lr.push_back(std::log(s.r[i]));
    lq.push_back(std::log(s.q[i]));
  }
  return least_squares(lr, lq).slope;
}

}  // namespace detail

/// Checks Q against the class-P conditions on the radial abscissae of `grid`.
///
/// Monotonicity is a finite-difference sign check on [R0, outer radius]. The
/// improper integral is decided by the tail exponent p (need p > 2). The outer
/// half is split in two to see how the local exponent moves: if it is still
/// rising above 2 the growth is treated as superpolynomial and accepted; if it
/// is falling, the limit is extrapolated from p(r) = p_inf + k / log r and the
/// profile is rejected when p_inf is within borderline_exponent_band of 2.
inline ClassPReport check_class_P(const PotentialSpec& Q, const Grid& grid, double R0) {
  const double outer = grid.outer_radius();
  if (!(R0 >= 0.0) || !(R0 < 0.5 * outer))
    throw InvalidArgument("check_class_P: need 0 <= R0 < outer_radius / 2");

  // positivity is a hard requirement on every node, not just beyond R0
  detail::sample_from(Q, grid, 0.0);
  const auto s = detail::sample_from(Q, grid, R0);
  if (s.r.size() < 8) throw InvalidArgument("check_class_P: too few nodes beyond R0");

  ClassPReport rep;
  rep.R0 = R0;
  rep.monotone_ok = true;
  for (std::size_t i = 1; i < s.q.size(); ++i)
    if (!(s.q[i] > s.q[i - 1])) {
      rep.monotone_ok = false;
      break;
    }

  std::size_t half = 0;
  while (half < s.r.size() && s.r[half] < 0.5 * outer) ++half;
  const std::size_t m = s.r.size();
  if (m - half < 8) half = m > 8 ? m - 8 : 0;
  rep.tail_exponent = detail::local_exponent(s, half, m);

  const std::size_t mid = half + (m - half) / 2;
  const double p_inner = detail::local_exponent(s, half, mid);
  const double p_outer = detail::local_exponent(s, mid, m);
  const double trend_tol = 1e-3;
  if (p_outer > p_inner + trend_tol) {
    rep.superpolynomial = p_outer > 2.0 && p_outer - p_inner > 0.05 * p_outer;
  } else if (p_outer < p_inner - trend_tol) {
    const double la = 1.0 / std::log(0.5 * (s.r[half] + s.r[mid - 1]));
    const double lb = 1.0 / std::log(0.5 * (s.r[mid] + s.r[m - 1]));
    if (std::abs(la - lb) > 0.0 && std::isfinite(la) && std::isfinite(lb)) {
      const double k = (p_inner - p_outer) / (la - lb);
      const double p_inf = p_outer - k * lb;
      rep.borderline = p_inf <= 2.0 + borderline_exponent_band;
    }
  }

  double integral = 0.0;
  for (std::size_t i = 1; i < m; ++i)
    integral += 0.5 * (s.r[i] - s.r[i - 1]) * (1.0 / std::sqrt(s.q[i]) + 1.0 / std::sqrt(s.q[i - 1]));
  const bool tail_converges = rep.tail_exponent > 2.0 + class_p_exponent_margin && !rep.borderline;
  if (tail_converges) {
    // integral of (Q(R) (r/R)^p)^{-1/2} over [R, inf)
    integral += s.r.back() / (std::sqrt(s.q.back()) * (0.5 * rep.tail_exponent - 1.0));
    rep.tail_integral = integral;
  } else {
    rep.tail_integral = std::numeric_limits<double>::infinity();
  }

  rep.member = rep.monotone_ok && tail_converges;
  return rep;
}

/// Checks the sandwich Q1(|x|) <= q(x) <= Q2(|x|) <= C0 Q1(|x|) on every grid
/// node, and evaluates
///   int_{R0}^inf (Q2 - Q1)(s) int_{R0}^s exp(-int_r^s (sqrt Q1 + sqrt Q2)) dr ds
/// by nested trapezoid quadrature on [R0, outer radius] with a power-law fit
/// of the outer integrand deciding the tail.
inline SandwichReport check_sandwich(const PotentialSpec& q, const PotentialSpec& Q1,
                                     const PotentialSpec& Q2, const Grid& grid, double R0) {
  SandwichReport rep;
  rep.Q1 = Q1;
  rep.Q2 = Q2;
  rep.R0 = R0;
  rep.Q1_class_p = check_class_P(Q1, grid, R0).member;
  rep.Q2_class_p = check_class_P(Q2, grid, R0).member;

  if (grid.geometry().is_radial() && !q.is_radial())
    throw InvalidArgument("check_sandwich: radial grid needs a radial q");

  rep.pointwise_ok = true;
  rep.C0 = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double r = grid.radius(k);
    const double q1 = Q1.radial(r), q2 = Q2.radial(r), qq = q.at_node(grid, k);
    rep.C0 = std::max(rep.C0, q2 / q1);
    if (rep.pointwise_ok && !(q1 <= qq && qq <= q2)) {
      rep.pointwise_ok = false;
      rep.offending_node = k;
      std::ostringstream os;
      os << "ordering Q1 <= q <= Q2 violated at node " << k << " (|x| = " << r << "): Q1 = " << q1
         << ", q = " << qq << ", Q2 = " << q2;
      rep.diagnostic = os.str();
    }
  }

  std::vector<double> s;
  for (double r : grid.radial_abscissae())
    if (r >= R0) s.push_back(r);
  const std::size_t m = s.size();
  std::vector<double> g(m, 0.0);
  double inner = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (j > 0) {
      const double ds = s[j] - s[j - 1];
      const double rate_prev = std::sqrt(Q1.radial(s[j - 1])) + std::sqrt(Q2.radial(s[j - 1]));
      const double rate = std::sqrt(Q1.radial(s[j])) + std::sqrt(Q2.radial(s[j]));
      const double decay = std::exp(-0.5 * ds * (rate + rate_prev));
      inner = decay * inner + 0.5 * ds * (decay + 1.0);
    }
    g[j] = (Q2.radial(s[j]) - Q1.radial(s[j])) * inner;
  }
  double truncated = 0.0;
  for (std::size_t j = 1; j < m; ++j) truncated += 0.5 * (s[j] - s[j - 1]) * (g[j] + g[j - 1]);
  rep.truncated_integral = truncated;

  std::size_t half = 0;
  while (half < m && s[half] < 0.5 * grid.outer_radius()) ++half;
  std::vector<double> ts, tg;
  bool any_nonzero = false;
  for (std::size_t j = half; j < m; ++j) {
    if (g[j] != 0.0) any_nonzero = true;
    if (g[j] > 0.0) {
      ts.push_back(s[j]);
      tg.push_back(g[j]);
    }
  }
  if (!any_nonzero) {
    rep.integrand_exponent = -std::numeric_limits<double>::infinity();
    rep.integral_finite = true;
    rep.perturbation_integral = truncated;
  } else {
    const PowerFit fit = loglog_fit(ts, tg);
    rep.integrand_exponent = fit.exponent;
    rep.integral_finite = std::isfinite(fit.exponent) && fit.exponent < -1.0 &&
                          tg.size() + 1 >= m - half;
    rep.perturbation_integral =
        rep.integral_finite ? truncated + g.back() * s.back() / (-fit.exponent - 1.0)
                            : std::numeric_limits<double>::infinity();
    if (!rep.integral_finite && rep.diagnostic.empty()) {
      std::ostringstream os;
      os << "perturbation integrand grows like s^" << fit.exponent << " on the outer half";
      rep.diagnostic = os.str();
    }
  }

  rep.holds = rep.pointwise_ok && rep.integral_finite && rep.Q1_class_p && rep.Q2_class_p;
  if (!rep.holds && rep.diagnostic.empty())
    rep.diagnostic = !rep.Q1_class_p ? "Q1 is not in class P" : "Q2 is not in class P";
  return rep;
}

/// The truncation rule: the potential at the Dirichlet boundary must dominate
/// four times the estimated principal eigenvalue.
inline bool truncation_ok(const Grid& grid, const PotentialSpec& Q1, double lambda_estimate) {
  const double R = grid.outer_radius();
  const double q = Q1.is_radial() ? Q1.radial(R) : Q1.at(R);
  return q >= 4.0 * lambda_estimate;
}

}  // namespace gsblow
