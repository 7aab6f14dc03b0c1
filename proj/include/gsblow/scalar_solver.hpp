#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "gsblow/error.hpp"
#include "gsblow/fit.hpp"
#include "gsblow/operator.hpp"
#include "gsblow/spectrum.hpp"

namespace gsblow {

/// Distance from Lambda below which a spectral parameter counts as the pole.
inline constexpr double pole_tolerance = 1e-12;
/// Ratios above this on the collar mean "not ground-state bounded".
inline constexpr double x_norm_threshold = 1e12;

/// f = c1 phi + perp with <perp, phi> = 0.
struct SpectralSplit {
  double c1 = 0.0;
  Vector perp;
};

inline SpectralSplit project(const Vector& f, const GroundState& gs) {
  if (f.size() != gs.phi.size())
    throw InvalidArgument("project: source length does not match the ground state");
  SpectralSplit s;
  s.c1 = gs.inner(f, gs.phi);
  s.perp = f - s.c1 * gs.phi;
  return s;
}

/// Smallest and largest u/phi over the collar, with the nodes where they occur.
struct RatioStats {
  double min = 0.0;
  double max = 0.0;
  std::size_t argmin = 0;
  std::size_t argmax = 0;
  /// min over the collar of |u| / phi
  double abs_min = 0.0;
  /// +1 if u > 0 on every collar node, -1 if u < 0 on every collar node, 0 otherwise.
  int sign = 0;
};

inline RatioStats collar_ratios(const Vector& u, const GroundState& gs) {
  const auto mask = collar_mask(gs.phi);
  RatioStats s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  s.abs_min = std::numeric_limits<double>::infinity();
  bool all_pos = true, all_neg = true;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const double r = u[i] / gs.phi[i];
    if (r < s.min) {
      s.min = r;
      s.argmin = static_cast<std::size_t>(i);
    }
    if (r > s.max) {
      s.max = r;
      s.argmax = static_cast<std::size_t>(i);
    }
    s.abs_min = std::min(s.abs_min, std::abs(r));
    all_pos = all_pos && u[i] > 0.0;
    all_neg = all_neg && u[i] < 0.0;
  }
  s.sign = all_pos ? 1 : (all_neg ? -1 : 0);
  return s;
}

/// Ground-state norm: max over the collar of |h| / phi.
struct XNorm {
  double value = 0.0;
  std::size_t argmax = 0;
  /// value <= 1e12
  bool finite = true;
  /// Some node outside the collar carries a larger ratio than the collar maximum.
  bool outside_collar_exceeds = false;
};

inline XNorm x_norm(const Vector& h, const GroundState& gs) {
  if (h.size() != gs.phi.size()) throw InvalidArgument("x_norm: length mismatch");
  const auto mask = collar_mask(gs.phi);
  XNorm out;
  double outside = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double r = std::abs(h[i]) / gs.phi[i];
    if (mask[static_cast<std::size_t>(i)]) {
      if (r > out.value) {
        out.value = r;
        out.argmax = static_cast<std::size_t>(i);
      }
    } else {
      outside = std::max(outside, r);
    }
  }
  out.finite = std::isfinite(out.value) && out.value <= x_norm_threshold;
  out.outside_collar_exceeds = outside > out.value;
  return out;
}

enum class Preconditioner {
  /// Projected inverse of the shifted operator, refreshed per solve.
  shifted_inverse,
  /// Plain projected CG.
  none,
};

struct ScalarOptions {
  /// Stop when the deflated residual falls below rel_tol * ||f||.
  double rel_tol = 1e-13;
  int max_iterations = 0;  // 0: 20 * size for plain CG, 50 with the preconditioner
  Preconditioner preconditioner = Preconditioner::shifted_inverse;
  /// sigma must stay below lambda2 - gap_tol * (lambda2 - lambda1).
  double gap_tol = 1e-6;
};

struct ScalarSolution {
  Vector u;
  /// Coefficient of u on phi: f^1 / (Lambda - sigma).
  double u1 = 0.0;
  Vector u_perp;
  /// ||(L - sigma) u - f|| / ||f|| for the full solution. Near the pole this is
  /// dominated by u1 times the eigenpair residual.
  double residual = 0.0;
  /// ||(L - sigma) u_perp - f_perp|| / ||f||, the deflated solve alone.
  double deflated_residual = 0.0;
  double x_norm_u = 0.0;
  int iterations = 0;
};

namespace detail {

/// Preconditioned CG for (L - sigma) y = b on the complement of phi, in
/// symmetrized coordinates. Every vector is kept orthogonal to phi_hat.
inline Vector projected_cg(const DiscreteOperator& op, const Vector& phi_hat, double sigma,
                           const Vector& b, double abs_tol, const ScalarOptions& opt, int& iterations) {
  const auto n = static_cast<Eigen::Index>(op.size());
  auto project_out = [&](Vector& v) { v -= phi_hat.dot(v) * phi_hat; };
  auto apply_a = [&](const Vector& v) {
    Vector out = op.apply_symmetric(v) - sigma * v;
    project_out(out);
    return out;
  };

  std::optional<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt;
  std::optional<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu;
  const bool precondition = opt.preconditioner == Preconditioner::shifted_inverse;
  if (precondition) {
    Eigen::SparseMatrix<double> eye(n, n);
    eye.setIdentity();
    const Eigen::SparseMatrix<double> m = op.symmetric_matrix() - sigma * eye;
    ldlt.emplace(m);
    if (ldlt->info() != Eigen::Success || (ldlt->vectorD().array() <= 0.0).any()) {
      ldlt.reset();
      lu.emplace(m);
      if (lu->info() != Eigen::Success) throw Error("solve_scalar: shifted factorization failed");
    }
  }
  auto apply_m = [&](const Vector& r) {
    Vector z = !precondition ? r : (ldlt ? Vector(ldlt->solve(r)) : Vector(lu->solve(r)));
    project_out(z);
    return z;
  };

  const int max_it = opt.max_iterations > 0 ? opt.max_iterations
                                            : (precondition ? 50 : 20 * static_cast<int>(n));
  Vector x = Vector::Zero(n);
  Vector r = b;
  project_out(r);
  iterations = 0;
  if (r.norm() <= abs_tol) return x;
  Vector z = apply_m(r);
  Vector p = z;
  double rz = r.dot(z);
  double best = r.norm();
  Vector best_x = x;
  int stalls = 0;
  while (iterations < max_it) {
    const Vector ap = apply_a(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;  // lost definiteness: sigma too close to lambda2
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    ++iterations;
    // recompute the true residual now and then so the recurrence cannot drift
    if (iterations % 10 == 0 || r.norm() <= abs_tol) {
      r = b - apply_a(x);
      project_out(r);
    }
    const double rn = r.norm();
    if (rn < best) {
      if (rn < 0.9 * best) stalls = 0;
      best = rn;
      best_x = x;
    } else if (++stalls > 20) {
      break;
    }
    if (rn <= abs_tol) break;
    z = apply_m(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  project_out(best_x);
  return best_x;
}

}  // namespace detail

/// Solves (L - sigma) u = f by splitting off the ground-state mode:
/// u = f^1 / (Lambda - sigma) phi + u_perp with (L - sigma) u_perp = f_perp on
/// the complement of phi.
inline ScalarSolution solve_scalar(const DiscreteOperator& op, const GroundState& gs, double sigma,
                                   const Vector& f, const ScalarOptions& opt = {}) {
  if (static_cast<std::size_t>(f.size()) != op.size())
    throw InvalidArgument("solve_scalar: source length does not match the grid");
  const double lam = gs.lambda1;
  if (std::abs(lam - sigma) < pole_tolerance)
    throw PoleError("solve_scalar: sigma = " + std::to_string(sigma) +
                    " is on the principal eigenvalue " + std::to_string(lam));
  if (sigma >= gs.lambda2 - opt.gap_tol * gs.gap())
    throw DeflationError("solve_scalar: sigma = " + std::to_string(sigma) +
                         " reaches the second eigenvalue " + std::to_string(gs.lambda2));

  const SpectralSplit split = project(f, gs);
  const double f_norm = weighted_norm(gs.weights, f);

  ScalarSolution sol;
  sol.u1 = split.c1 / (lam - sigma);

  const Vector phi_hat = op.to_symmetric(gs.phi);
  const Vector b = op.to_symmetric(split.perp);
  const Vector y = detail::projected_cg(op, phi_hat, sigma, b, opt.rel_tol * f_norm, opt, sol.iterations);
  sol.u_perp = op.from_symmetric(y);
  sol.u = sol.u1 * gs.phi + sol.u_perp;

  const double denom = f_norm > 0.0 ? f_norm : 1.0;
  const Vector full = op.apply(sol.u) - sigma * sol.u - f;
  sol.residual = weighted_norm(gs.weights, full) / denom;
  const Vector defl = op.apply(sol.u_perp) - sigma * sol.u_perp - split.perp;
  sol.deflated_residual = weighted_norm(gs.weights, defl) / denom;
  sol.x_norm_u = x_norm(sol.u, gs).value;
  return sol;
}

enum class CertificateKind { gsp, gsn, lim_below, lim_above };

inline const char* to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::gsp: return "GSP";
    case CertificateKind::gsn: return "GSN";
    case CertificateKind::lim_below: return "LIM_below";
    case CertificateKind::lim_above: return "LIM_above";
  }
  return "?";
}

/// A node-wise bound of u against phi on the collar.
///
///   GSP:        u >= lower * phi                       (lower = min u/phi)
///   GSN:        u <= -lower * phi                      (lower = -max u/phi)
///   LIM_below:  lower/(Lambda-sigma) phi <= u <= upper/(Lambda-sigma) phi
///   LIM_above:  lower/(sigma-Lambda) phi <= -u <= upper/(sigma-Lambda) phi
struct Certificate {
  CertificateKind kind = CertificateKind::gsp;
  double lower = 0.0;
  double upper = 0.0;
  bool holds = false;
  std::size_t witness_node = 0;
  /// GSP only: u <= C/(Lambda - sigma) phi with C = ||f||_X, when f is ground-state bounded.
  std::optional<bool> upper_bound_ok;
};

inline std::vector<Certificate> certify(const ScalarSolution& sol, const GroundState& gs,
                                        double sigma, const Vector& f) {
  const RatioStats r = collar_ratios(sol.u, gs);
  const double dist = gs.lambda1 - sigma;
  std::vector<Certificate> out;
  if (dist > 0.0) {
    Certificate gsp{CertificateKind::gsp, r.min, r.max, r.min > 0.0, r.argmin, std::nullopt};
    const XNorm fx = x_norm(f, gs);
    if (fx.finite) {
      const double bound = fx.value / dist;
      gsp.upper_bound_ok = r.max <= bound * (1.0 + 1e-10);
    }
    out.push_back(gsp);
    const double k_lo = dist * r.min, k_hi = dist * r.max;
    out.push_back({CertificateKind::lim_below, k_lo, k_hi, k_lo > 0.0, r.argmin, std::nullopt});
  } else {
    const double cprime = -r.max;
    out.push_back({CertificateKind::gsn, cprime, -r.min, cprime > 0.0, r.argmax, std::nullopt});
    const double k_lo = -dist * (-r.max), k_hi = -dist * (-r.min);
    out.push_back({CertificateKind::lim_above, k_lo, k_hi, k_lo > 0.0, r.argmax, std::nullopt});
  }
  return out;
}

inline const Certificate* find_certificate(const std::vector<Certificate>& certs, CertificateKind k) {
  for (const auto& c : certs)
    if (c.kind == k) return &c;
  return nullptr;
}

struct DeltaEstimate {
  /// Largest sampled-and-bisected window (0, delta] above Lambda on which the
  /// GSN inequality held at every probed sigma.
  double delta = 0.0;
  /// First probed sigma where GSN failed; NaN if it never failed.
  double failing_sigma = std::numeric_limits<double>::quiet_NaN();
  /// Lambda2 - Lambda.
  double window = 0.0;
  std::string diagnostic;
};

/// Empirical width of the antimaximum window above Lambda for source f.
///
/// Probes sigma = Lambda + window * 10^{-6 + j/4}, j = 0..24 (the last probe
/// pulled back to 1 - 1e-4 of the window), then bisects between the last
/// success and the first failure. If every probe succeeds the whole window
/// Lambda2 - Lambda is returned.
inline DeltaEstimate estimate_delta(const DiscreteOperator& op, const GroundState& gs,
                                    const Vector& f, const ScalarOptions& opt = {}) {
  const SpectralSplit split = project(f, gs);
  if (!(split.c1 > 0.0))
    throw InvalidArgument("estimate_delta: source needs a positive ground-state coefficient");
  if (!x_norm(f, gs).finite)
    throw InvalidArgument("estimate_delta: source is not ground-state bounded");

  DeltaEstimate est;
  est.window = gs.gap();
  auto gsn_holds = [&](double delta) {
    const double sigma = gs.lambda1 + delta;
    const ScalarSolution s = solve_scalar(op, gs, sigma, f, opt);
    return find_certificate(certify(s, gs, sigma, f), CertificateKind::gsn)->holds;
  };

  const int probes = 24;
  double last_ok = 0.0;
  for (int j = 0; j <= probes; ++j) {
    double delta = est.window * std::pow(10.0, -6.0 + 6.0 * j / probes);
    if (j == probes) delta = est.window * (1.0 - 1e-4);
    if (gsn_holds(delta)) {
      last_ok = delta;
      continue;
    }
    if (j == 0) {
      est.delta = 0.0;
      est.failing_sigma = gs.lambda1 + delta;
      est.diagnostic = "GSN fails already at sigma - Lambda = " + std::to_string(delta);
      return est;
    }
    double lo = last_ok, hi = delta;
    for (int b = 0; b < 40 && hi - lo > 1e-12 * est.window; ++b) {
      const double mid = 0.5 * (lo + hi);
      (gsn_holds(mid) ? lo : hi) = mid;
    }
    est.delta = lo;
    est.failing_sigma = gs.lambda1 + hi;
    est.diagnostic = "GSN lost between sigma - Lambda = " + std::to_string(lo) + " and " +
                     std::to_string(hi);
    return est;
  }
  est.delta = est.window;
  est.diagnostic = "GSN held on every probe up to the second eigenvalue";
  return est;
}

struct ScalarSweepRecord {
  double sigma = 0.0;
  double lambda_minus_sigma = 0.0;
  double u1 = 0.0;
  double x_norm_u = 0.0;
  /// GSP constant (min collar u/phi) when sigma < Lambda, NaN otherwise.
  double gsp_c = std::numeric_limits<double>::quiet_NaN();
  /// GSN constant (-max collar u/phi) when sigma > Lambda, NaN otherwise.
  double gsn_cprime = std::numeric_limits<double>::quiet_NaN();
  /// Deflated residual of the solve.
  double residual = 0.0;
  bool certificate_holds = false;
};

struct ScalarSweepResult {
  std::vector<ScalarSweepRecord> records;
  /// Fit of log(max collar |u|/phi) against log|Lambda - sigma|.
  PowerFit fit;
  /// Largest k with |u|/phi >= k / |Lambda - sigma| on the collar at every sigma.
  double uniform_lower_constant = 0.0;
};

/// Solves at sigma = Lambda - side * offset for each offset (side = +1 below,
/// -1 above) and fits the blow-up exponent.
inline ScalarSweepResult scalar_sweep(const DiscreteOperator& op, const GroundState& gs,
                                      const Vector& f, const std::vector<double>& offsets,
                                      int side = +1, const ScalarOptions& opt = {}) {
  ScalarSweepResult out;
  std::vector<double> xs, ys;
  double k_uniform = std::numeric_limits<double>::infinity();
  for (double off : offsets) {
    if (!(off > 0.0)) throw InvalidArgument("scalar_sweep: offsets must be positive");
    const double sigma = gs.lambda1 - side * off;
    const ScalarSolution s = solve_scalar(op, gs, sigma, f, opt);
    const auto certs = certify(s, gs, sigma, f);
    ScalarSweepRecord rec;
    rec.sigma = sigma;
    rec.lambda_minus_sigma = gs.lambda1 - sigma;
    rec.u1 = s.u1;
    rec.x_norm_u = s.x_norm_u;
    rec.residual = s.deflated_residual;
    const Certificate& c = certs.front();
    if (side > 0)
      rec.gsp_c = c.lower;
    else
      rec.gsn_cprime = c.lower;
    rec.certificate_holds = c.holds;
    k_uniform = std::min(k_uniform, rec.lambda_minus_sigma * side * c.lower);
    out.records.push_back(rec);
    xs.push_back(off);
    ys.push_back(s.x_norm_u);
  }
  out.fit = loglog_fit(xs, ys);
  out.uniform_lower_constant = out.records.empty() ? 0.0 : k_uniform;
  return out;
}

/// 10^{-first}, ..., 10^{-last}, `per_decade` points per decade, geometric.
inline std::vector<double> geometric_offsets(int first_decade = 1, int last_decade = 6,
                                             int per_decade = 1) {
  if (last_decade < first_decade || per_decade < 1)
    throw InvalidArgument("geometric_offsets: bad decade range");
  std::vector<double> out;
  const int steps = (last_decade - first_decade) * per_decade;
  for (int j = 0; j <= steps; ++j)
    out.push_back(std::pow(10.0, -(first_decade + static_cast<double>(j) / per_decade)));
  return out;
}

}  // namespace gsblow
