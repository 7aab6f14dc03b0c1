#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "gsblow/error.hpp"
#include "gsblow/fit.hpp"
#include "gsblow/operator.hpp"
#include "gsblow/scalar_solver.hpp"
#include "gsblow/spectrum.hpp"

namespace gsblow {

using Matrix2 = Eigen::Matrix2d;

/// Constant coupling matrix A = (a b; c d) of the 2x2 system.
struct CouplingMatrix {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  Matrix2 matrix() const { return (Matrix2() << a, b, c, d).finished(); }
  double discriminant() const { return (a - d) * (a - d) + 4.0 * b * c; }
  CouplingMatrix swapped() const { return {d, c, b, a}; }
};

enum class EigenCase { distinct, double_eigenvalue };

/// Spectral data of A, including its Jordan decomposition A = P J P^{-1}.
///
/// All formulas are evaluated on `normalized`, the matrix with b > 0 (the
/// equations are swapped when only c is positive). P, Pinv and X are stored
/// for the original equation order, so U = P U~ and A = P J Pinv hold for
/// `original` directly.
struct MatrixAnalysis {
  CouplingMatrix original;
  CouplingMatrix normalized;
  bool swapped = false;
  double D = 0.0;
  double xi1 = 0.0;
  double xi2 = 0.0;
  EigenCase kind = EigenCase::distinct;
  /// Off-diagonals nonnegative.
  bool cooperative = false;
  Matrix2 P = Matrix2::Identity();
  Matrix2 Pinv = Matrix2::Identity();
  Matrix2 J = Matrix2::Identity();
  /// Principal eigenvector of A, (b, xi1 - a) in normalized order.
  Eigen::Vector2d X = Eigen::Vector2d::Zero();

  Matrix2 reconstruct() const { return P * J * Pinv; }
};

/// Analyzes A under b > 0, D = (a-d)^2 + 4bc >= 0.
///
/// A discriminant within rounding of zero (64 ulp of (a-d)^2 + 4|bc|) is
/// treated as a double eigenvalue xi = (a+d)/2. That case uses
///   P = (b, 2b/(a-d); (d-a)/2, 0),  J = (xi, 1; 0, xi)
/// and is rejected when a = d.
inline MatrixAnalysis analyze(const CouplingMatrix& A) {
  for (double v : {A.a, A.b, A.c, A.d})
    if (!std::isfinite(v)) throw InvalidArgument("analyze: matrix entries must be finite");
  MatrixAnalysis m;
  m.original = A;
  m.normalized = A;
  if (!(A.b > 0.0)) {
    if (A.c > 0.0) {
      m.normalized = A.swapped();
      m.swapped = true;
    } else {
      throw InvalidArgument("analyze: both off-diagonal entries are <= 0; no ordering gives b > 0");
    }
  }
  const auto [a, b, c, d] = m.normalized;
  const double scale = (a - d) * (a - d) + 4.0 * std::abs(b * c);
  const double D = m.normalized.discriminant();
  const bool is_double = std::abs(D) <= 64.0 * std::numeric_limits<double>::epsilon() * scale;
  if (!is_double && D < 0.0)
    throw InvalidArgument("analyze: complex eigenvalues (D < 0) are out of scope");
  m.cooperative = c >= 0.0;

  if (is_double) {
    m.D = 0.0;
    m.kind = EigenCase::double_eigenvalue;
    if (a == d)
      throw DegenerateError("analyze: double eigenvalue with a = d; the generalized "
                            "eigenvector basis needs a != d");
    const double xi = 0.5 * (a + d);
    m.xi1 = m.xi2 = xi;
    m.P << b, 2.0 * b / (a - d), 0.5 * (d - a), 0.0;
    m.Pinv << 0.0, -2.0 / (a - d), 0.5 * (a - d) / b, 1.0;
    m.J << xi, 1.0, 0.0, xi;
    m.X << b, 0.5 * (d - a);
  } else {
    m.D = D;
    m.kind = EigenCase::distinct;
    const double root = std::sqrt(D);
    m.xi1 = 0.5 * (a + d + root);
    m.xi2 = 0.5 * (a + d - root);
    // xi_k - a without cancellation
    const double e1 = 0.5 * ((d - a) + root);
    const double e2 = 0.5 * ((d - a) - root);
    m.P << b, b, e1, e2;
    const double s = 1.0 / (b * root);
    m.Pinv << -e2 * s, b * s, e1 * s, -b * s;
    m.J << m.xi1, 0.0, 0.0, m.xi2;
    m.X << b, e1;
  }

  if (m.swapped) {
    m.P.row(0).swap(m.P.row(1));
    m.Pinv.col(0).swap(m.Pinv.col(1));
    std::swap(m.X[0], m.X[1]);
  }
  return m;
}

/// Principal eigenvalue nu = Lambda - xi1 of the system and its eigenvector X phi.
struct PrincipalPair {
  double nu = 0.0;
  Vector x1;
  Vector x2;
  /// Weighted norm of L(X phi) - A X phi - nu X phi over both components.
  double residual = 0.0;
};

inline PrincipalPair principal_pair(const DiscreteOperator& op, const GroundState& gs,
                                    const MatrixAnalysis& ma) {
  PrincipalPair p;
  p.nu = gs.lambda1 - ma.xi1;
  p.x1 = ma.X[0] * gs.phi;
  p.x2 = ma.X[1] * gs.phi;
  const auto& A = ma.original;
  const Vector r1 = op.apply(p.x1) - A.a * p.x1 - A.b * p.x2 - p.nu * p.x1;
  const Vector r2 = op.apply(p.x2) - A.c * p.x1 - A.d * p.x2 - p.nu * p.x2;
  p.residual = std::hypot(weighted_norm(gs.weights, r1), weighted_norm(gs.weights, r2));
  return p;
}

struct SystemProblem {
  double mu = 0.0;
  Vector f1;
  Vector f2;
};

/// Ground-state coefficients (f1^1, f2^1).
inline std::array<double, 2> source_coefficients(const SystemProblem& prob, const GroundState& gs) {
  return {gs.inner(prob.f1, gs.phi), gs.inner(prob.f2, gs.phi)};
}

struct SystemSolution {
  Vector u1, u2;
  Vector tilde_u1, tilde_u2;
  double nu = 0.0;
  /// ||equation_k residual|| / ||F||, weighted norms.
  double residual1 = 0.0;
  double residual2 = 0.0;
  RatioStats ratios1;
  RatioStats ratios2;
};

/// Where a system solve at mu is well posed.
///
/// The poles are mu = Lambda - xi1 (= nu) and mu = Lambda - xi2. The deflated
/// scalar solves need xi_k + mu < Lambda2, i.e. mu < Lambda2 - xi1.
struct AdmissibleWindow {
  double pole_principal = 0.0;
  double pole_secondary = 0.0;
  double deflation_bound = 0.0;

  bool admits(double mu) const {
    return std::abs(mu - pole_principal) >= pole_tolerance &&
           std::abs(mu - pole_secondary) >= pole_tolerance && mu < deflation_bound;
  }
};

inline AdmissibleWindow admissible_window(const GroundState& gs, const MatrixAnalysis& ma) {
  return {gs.lambda1 - ma.xi1, gs.lambda1 - ma.xi2, gs.lambda2 - ma.xi1};
}

namespace detail {

inline void check_problem(const DiscreteOperator& op, const SystemProblem& prob) {
  if (static_cast<std::size_t>(prob.f1.size()) != op.size() ||
      static_cast<std::size_t>(prob.f2.size()) != op.size())
    throw InvalidArgument("system solve: source length does not match the grid");
}

inline void finish_solution(const DiscreteOperator& op, const GroundState& gs,
                            const MatrixAnalysis& ma, const SystemProblem& prob, SystemSolution& s) {
  const auto& A = ma.original;
  const Vector r1 = op.apply(s.u1) - A.a * s.u1 - A.b * s.u2 - prob.mu * s.u1 - prob.f1;
  const Vector r2 = op.apply(s.u2) - A.c * s.u1 - A.d * s.u2 - prob.mu * s.u2 - prob.f2;
  double fn = std::hypot(weighted_norm(gs.weights, prob.f1), weighted_norm(gs.weights, prob.f2));
  if (fn == 0.0) fn = 1.0;
  s.residual1 = weighted_norm(gs.weights, r1) / fn;
  s.residual2 = weighted_norm(gs.weights, r2) / fn;
  s.nu = gs.lambda1 - ma.xi1;
  s.ratios1 = collar_ratios(s.u1, gs);
  s.ratios2 = collar_ratios(s.u2, gs);
}

inline ScalarSolution solve_component(const DiscreteOperator& op, const GroundState& gs,
                                      double sigma, const Vector& f, int k,
                                      const ScalarOptions& opt) {
  try {
    return solve_scalar(op, gs, sigma, f, opt);
  } catch (const PoleError& e) {
    throw PoleError("decoupled equation " + std::to_string(k) + ": " + e.what(), k);
  }
}

}  // namespace detail

/// Distinct eigenvalues: U~ = Pinv U decouples into two scalar problems
/// L u~_k = (xi_k + mu) u~_k + f~_k.
inline SystemSolution solve_distinct(const DiscreteOperator& op, const GroundState& gs,
                                     const MatrixAnalysis& ma, const SystemProblem& prob,
                                     const ScalarOptions& opt = {}) {
  if (ma.kind != EigenCase::distinct) throw InvalidArgument("solve_distinct: matrix has a double eigenvalue");
  detail::check_problem(op, prob);
  const Vector tf1 = ma.Pinv(0, 0) * prob.f1 + ma.Pinv(0, 1) * prob.f2;
  const Vector tf2 = ma.Pinv(1, 0) * prob.f1 + ma.Pinv(1, 1) * prob.f2;
  SystemSolution s;
  s.tilde_u1 = detail::solve_component(op, gs, ma.xi1 + prob.mu, tf1, 1, opt).u;
  s.tilde_u2 = detail::solve_component(op, gs, ma.xi2 + prob.mu, tf2, 2, opt).u;
  s.u1 = ma.P(0, 0) * s.tilde_u1 + ma.P(0, 1) * s.tilde_u2;
  s.u2 = ma.P(1, 0) * s.tilde_u1 + ma.P(1, 1) * s.tilde_u2;
  detail::finish_solution(op, gs, ma, prob, s);
  return s;
}

/// Double eigenvalue: the Jordan block leaves the triangular pair
///   L u~_1 = (xi + mu) u~_1 + u~_2 + f~_1,   L u~_2 = (xi + mu) u~_2 + f~_2,
/// solved bottom-up. u~_1 inherits a second-order pole through its source u~_2.
inline SystemSolution solve_double(const DiscreteOperator& op, const GroundState& gs,
                                   const MatrixAnalysis& ma, const SystemProblem& prob,
                                   const ScalarOptions& opt = {}) {
  if (ma.kind != EigenCase::double_eigenvalue)
    throw InvalidArgument("solve_double: matrix has distinct eigenvalues");
  detail::check_problem(op, prob);
  const Vector tf1 = ma.Pinv(0, 0) * prob.f1 + ma.Pinv(0, 1) * prob.f2;
  const Vector tf2 = ma.Pinv(1, 0) * prob.f1 + ma.Pinv(1, 1) * prob.f2;
  const double sigma = ma.xi1 + prob.mu;
  SystemSolution s;
  s.tilde_u2 = detail::solve_component(op, gs, sigma, tf2, 2, opt).u;
  s.tilde_u1 = detail::solve_component(op, gs, sigma, Vector(s.tilde_u2 + tf1), 1, opt).u;
  s.u1 = ma.P(0, 0) * s.tilde_u1 + ma.P(0, 1) * s.tilde_u2;
  s.u2 = ma.P(1, 0) * s.tilde_u1 + ma.P(1, 1) * s.tilde_u2;
  detail::finish_solution(op, gs, ma, prob, s);
  return s;
}

inline SystemSolution solve_system(const DiscreteOperator& op, const GroundState& gs,
                                   const MatrixAnalysis& ma, const SystemProblem& prob,
                                   const ScalarOptions& opt = {}) {
  return ma.kind == EigenCase::distinct ? solve_distinct(op, gs, ma, prob, opt)
                                        : solve_double(op, gs, ma, prob, opt);
}

inline constexpr std::size_t max_direct_size = 200;

/// Reference solution: the coupled 2n x 2n system ((L - mu) I - A) U = F
/// assembled densely from L and solved by LU with partial pivoting.
inline SystemSolution solve_direct_coupled(const DiscreteOperator& op, const GroundState& gs,
                                           const MatrixAnalysis& ma, const SystemProblem& prob) {
  if (op.size() > max_direct_size)
    throw InvalidArgument("solve_direct_coupled: limited to " + std::to_string(max_direct_size) +
                          " nodes");
  detail::check_problem(op, prob);
  const auto n = static_cast<Eigen::Index>(op.size());
  const Eigen::MatrixXd L = op.dense();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const auto& A = ma.original;
  Eigen::MatrixXd K(2 * n, 2 * n);
  K.topLeftCorner(n, n) = L - (prob.mu + A.a) * I;
  K.topRightCorner(n, n) = -A.b * I;
  K.bottomLeftCorner(n, n) = -A.c * I;
  K.bottomRightCorner(n, n) = L - (prob.mu + A.d) * I;
  Vector rhs(2 * n);
  rhs << prob.f1, prob.f2;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  if (!(lu.rcond() > 1e-15))
    throw PoleError("solve_direct_coupled: block system is singular at mu = " +
                    std::to_string(prob.mu));
  const Vector U = lu.solve(rhs);
  SystemSolution s;
  s.u1 = U.head(n);
  s.u2 = U.tail(n);
  s.tilde_u1 = ma.Pinv(0, 0) * s.u1 + ma.Pinv(0, 1) * s.u2;
  s.tilde_u2 = ma.Pinv(1, 0) * s.u1 + ma.Pinv(1, 1) * s.u2;
  detail::finish_solution(op, gs, ma, prob, s);
  return s;
}

/// Asymptotic signs of (u1, u2) on the collar: +1, -1, or 0 (undetermined).
struct SignPattern {
  int u1 = 0;
  int u2 = 0;
  bool operator==(const SignPattern&) const = default;
};

inline std::string to_string(const SignPattern& p) {
  auto c = [](int s) { return s > 0 ? "+" : (s < 0 ? "-" : "?"); };
  return std::string("(") + c(p.u1) + ", " + c(p.u2) + ")";
}

enum class TheoremBranch {
  /// distinct eigenvalues, d - a > 0
  distinct_main,
  /// distinct eigenvalues, d - a < 0
  distinct_remark,
  double_eigenvalue,
  /// strict inequality margin below 1e-10
  inconclusive,
  /// sources lack a positive ground-state coefficient or the margin has the wrong sign
  not_applicable,
};

inline const char* to_string(TheoremBranch b) {
  switch (b) {
    case TheoremBranch::distinct_main: return "distinct eigenvalues, d - a > 0";
    case TheoremBranch::distinct_remark: return "distinct eigenvalues, d - a < 0";
    case TheoremBranch::double_eigenvalue: return "double eigenvalue";
    case TheoremBranch::inconclusive: return "inconclusive";
    case TheoremBranch::not_applicable: return "not applicable";
  }
  return "?";
}

struct ConditionReport {
  double f1_1 = 0.0;
  double f2_1 = 0.0;
  bool sources_ok = false;
  TheoremBranch branch = TheoremBranch::not_applicable;
  /// Distinct: (a - xi2) f1^1 + b f2^1.  Double: (a - d)/2 f1^1 + b f2^1.
  /// Normalized (b > 0) equation order.
  double margin = 0.0;
  /// Ground-state coefficient of the transformed source feeding the leading
  /// pole: (f~_1)^1 for distinct eigenvalues, (f~_2)^1 for a double one.
  double leading_coefficient = 0.0;
  /// Order of the leading pole in |nu - mu|: 1 distinct, 2 double.
  int pole_order = 1;
  /// Signs implied by the leading pole, below and above nu (original order).
  SignPattern predicted_below;
  SignPattern predicted_above;
  /// Signs as stated by the blow-up theorems for this branch (original order).
  SignPattern stated_below;
  SignPattern stated_above;
  bool applies = false;
  std::string summary;
};

/// Evaluates the sign conditions of the blow-up theorems for the sources in
/// `prob` and predicts the sign pattern of (u1, u2) on either side of nu.
///
/// The prediction follows the leading pole of U = P U~: for distinct
/// eigenvalues u ~ (f~_1)^1 / (nu - mu) X phi, which flips sign across nu;
/// for a double eigenvalue u ~ (f~_2)^1 / (nu - mu)^2 X phi, which does not.
inline ConditionReport check_theorem_conditions(const MatrixAnalysis& ma, const SystemProblem& prob,
                                                const GroundState& gs) {
  ConditionReport rep;
  auto coeff = source_coefficients(prob, gs);
  rep.f1_1 = coeff[0];
  rep.f2_1 = coeff[1];
  double g1 = coeff[0], g2 = coeff[1];
  if (ma.swapped) std::swap(g1, g2);
  rep.sources_ok = g1 > 0.0 && g2 > 0.0;

  const auto [a, b, c, d] = ma.normalized;
  auto sgn = [](double v, double tol) { return v > tol ? 1 : (v < -tol ? -1 : 0); };
  auto to_original = [&](SignPattern p) {
    if (ma.swapped) std::swap(p.u1, p.u2);
    return p;
  };

  SignPattern below, above, stated_below, stated_above;
  double term_scale = 0.0;
  if (ma.kind == EigenCase::distinct) {
    const double root = std::sqrt(ma.D);
    const double a_minus_xi2 = -0.5 * ((d - a) - root);
    const double xi1_minus_a = 0.5 * ((d - a) + root);
    rep.margin = a_minus_xi2 * g1 + b * g2;
    term_scale = std::abs(a_minus_xi2 * g1) + std::abs(b * g2);
    rep.leading_coefficient = rep.margin / root;
    rep.pole_order = 1;
    const int lead = sgn(rep.margin, 1e-10 * std::max(1.0, term_scale));
    const int s2 = sgn(xi1_minus_a, 1e-12 * std::max(1.0, std::abs(a) + std::abs(d)));
    below = {lead, lead * s2};
    above = {-lead, -lead * s2};
    rep.branch = d - a < 0.0 ? TheoremBranch::distinct_remark : TheoremBranch::distinct_main;
    if (rep.branch == TheoremBranch::distinct_main) {
      stated_below = {1, 1};
      stated_above = {-1, -1};
    } else {
      stated_below = {1, -1};
      stated_above = {0, 0};  // the remark only covers mu < nu
    }
  } else {
    rep.margin = 0.5 * (a - d) * g1 + b * g2;
    term_scale = std::abs(0.5 * (a - d) * g1) + std::abs(b * g2);
    rep.leading_coefficient = rep.margin / b;
    rep.pole_order = 2;
    const int lead = sgn(rep.margin, 1e-10 * std::max(1.0, term_scale));
    below = {lead, lead * sgn(d - a, 0.0)};
    above = below;
    rep.branch = TheoremBranch::double_eigenvalue;
    stated_below = {1, -1};
    stated_above = {-1, 1};
  }

  const bool conclusive = std::abs(rep.margin) > 1e-10 * std::max(1.0, term_scale);
  if (!conclusive) rep.branch = TheoremBranch::inconclusive;
  else if (!rep.sources_ok || rep.margin < 0.0) rep.branch = TheoremBranch::not_applicable;
  rep.applies = conclusive && rep.sources_ok && rep.margin > 0.0;

  rep.predicted_below = to_original(below);
  rep.predicted_above = to_original(above);
  rep.stated_below = to_original(stated_below);
  rep.stated_above = to_original(stated_above);

  std::ostringstream os;
  os << "branch: " << to_string(rep.branch) << "; f1^1 = " << rep.f1_1 << ", f2^1 = " << rep.f2_1
     << "; margin = " << rep.margin << "; leading pole order " << rep.pole_order
     << "; predicted below nu " << to_string(rep.predicted_below) << ", above nu "
     << to_string(rep.predicted_above);
  if (rep.applies && !(rep.stated_below == rep.predicted_below &&
                       (rep.stated_above == SignPattern{} || rep.stated_above == rep.predicted_above)))
    os << "; theorem text states below " << to_string(rep.stated_below) << ", above "
       << to_string(rep.stated_above);
  rep.summary = os.str();
  return rep;
}

struct SweepRecord {
  double mu = 0.0;
  double nu_minus_mu = 0.0;
  /// "below" (mu < nu) or "above".
  std::string side;
  RatioStats ratios1;
  RatioStats ratios2;
  double residual1 = 0.0;
  double residual2 = 0.0;
  SignPattern observed;
};

struct ComponentFit {
  /// Exponent of collar-min |u_i|/phi against |nu - mu|.
  double slope = std::numeric_limits<double>::quiet_NaN();
  /// exp(intercept) of the same fit.
  double gamma = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  std::vector<double> schedule;
  std::vector<SweepRecord> records;
  std::array<ComponentFit, 2> fit;
  /// Common sign pattern of all records (components that change are 0).
  SignPattern sign_pattern;
};

/// A sweep that failed part-way; `partial` holds the records solved before the failure.
class SweepError : public Error {
 public:
  SweepError(const std::string& what, SweepResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const SweepResult& partial() const { return partial_; }

 private:
  SweepResult partial_;
};

/// Schedule mu = nu -/+ offsets on one side of nu.
inline std::vector<double> sweep_schedule(double nu, const std::vector<double>& offsets, int side) {
  std::vector<double> mu;
  for (double o : offsets) mu.push_back(side > 0 ? nu - o : nu + o);
  return mu;
}

/// Solves the system at every mu of `schedule` and fits the blow-up exponent
/// of each component. Solves run on `threads` workers; records keep schedule order.
inline SweepResult blowup_sweep(const DiscreteOperator& op, const GroundState& gs,
                                const MatrixAnalysis& ma, const Vector& f1, const Vector& f2,
                                const std::vector<double>& schedule, unsigned threads = 1,
                                const ScalarOptions& opt = {}) {
  if (schedule.size() < 2) throw InvalidArgument("blowup_sweep: need at least two mu values");
  const double nu = gs.lambda1 - ma.xi1;
  const bool below = schedule.front() < nu;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double mu : schedule) {
    if ((mu < nu) != below || mu == nu)
      throw InvalidArgument("blowup_sweep: schedule must lie strictly on one side of nu");
    lo = std::min(lo, std::abs(nu - mu));
    hi = std::max(hi, std::abs(nu - mu));
  }
  if (hi < 1e4 * lo * (1.0 - 1e-9))
    throw InvalidArgument("blowup_sweep: schedule must span at least 4 decades of |nu - mu|");

  const std::size_t m = schedule.size();
  std::vector<SystemSolution> sols(m);
  std::vector<std::exception_ptr> errors(m);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < m; i = next++) {
      try {
        sols[i] = solve_system(op, gs, ma, {schedule[i], f1, f2}, opt);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(m)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SweepResult out;
  out.schedule = schedule;
  for (std::size_t i = 0; i < m; ++i) {
    if (errors[i]) {
      std::string what = "unknown error";
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        what = e.what();
      }
      throw SweepError("blowup_sweep: solve at mu = " + std::to_string(schedule[i]) +
                           " failed: " + what,
                       out);
    }
    const SystemSolution& s = sols[i];
    SweepRecord r;
    r.mu = schedule[i];
    r.nu_minus_mu = nu - schedule[i];
    r.side = below ? "below" : "above";
    r.ratios1 = s.ratios1;
    r.ratios2 = s.ratios2;
    r.residual1 = s.residual1;
    r.residual2 = s.residual2;
    r.observed = {s.ratios1.sign, s.ratios2.sign};
    out.records.push_back(r);
  }

  std::vector<double> dist, m1, m2;
  for (const auto& r : out.records) {
    dist.push_back(std::abs(r.nu_minus_mu));
    m1.push_back(r.ratios1.abs_min);
    m2.push_back(r.ratios2.abs_min);
  }
  for (int k = 0; k < 2; ++k) {
    const PowerFit pf = loglog_fit(dist, k == 0 ? m1 : m2);
    out.fit[static_cast<std::size_t>(k)] = {pf.exponent, pf.prefactor};
  }
  out.sign_pattern = out.records.front().observed;
  for (const auto& r : out.records) {
    if (r.observed.u1 != out.sign_pattern.u1) out.sign_pattern.u1 = 0;
    if (r.observed.u2 != out.sign_pattern.u2) out.sign_pattern.u2 = 0;
  }
  return out;
}

}  // namespace gsblow
