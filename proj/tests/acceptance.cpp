// End-to-end acceptance checks. One line per check; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gsblow/cli.hpp"
#include "gsblow/hypotheses.hpp"
#include "gsblow/scalar_solver.hpp"
#include "gsblow/spectrum.hpp"
#include "gsblow/system_solver.hpp"
#include "support.hpp"

using namespace gsblow;
using gsblow::testing::gaussian;
using gsblow::testing::relative_x_diff;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome eigensolver_accuracy() {
  const auto t0 = std::chrono::steady_clock::now();
  Grid g(Geometry::cartesian(1), 10.0, 2000);
  const double e1 = std::abs(ground_state(assemble(g, PotentialSpec::power(2.0))).lambda1 - 1.0);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Grid g2(Geometry::cartesian(1), 10.0, 4001);
  const double e2 = std::abs(ground_state(assemble(g2, PotentialSpec::power(2.0))).lambda1 - 1.0);
  const double ratio = e1 / e2;
  return {e1 <= 1e-4 && ratio >= 3.5 && ratio <= 4.5 && seconds < 5.0,
          fmt("|Lambda - 1| = %.3e", e1) + fmt(", error ratio on halving h = %.4f", ratio) +
              fmt(", time %.3f s", seconds)};
}

Outcome spectrum_oracle() {
  Grid g(Geometry::cartesian(1), 8.0, 200);
  const auto op = assemble(g, PotentialSpec::power(4.0));
  const auto gs = ground_state(op);
  const auto d = dense_oracle(op);
  const double dl = std::abs(gs.lambda1 - d.values[0]);
  const double align = 1.0 - std::abs(gs.inner(gs.phi, Vector(d.vectors.col(0))));
  return {dl <= 1e-8 && align <= 1e-10,
          fmt("|dLambda| = %.3e", dl) + fmt(", 1 - |<phi_s, phi_d>| = %.3e", align)};
}

Outcome pole_identity() {
  Grid g(Geometry::cartesian(1), 8.0, 400);
  const auto op = assemble(g, PotentialSpec::power(4.0));
  const auto gs = ground_state(op);
  std::mt19937 gen(2024);
  std::uniform_real_distribution<double> amp(0.1, 2.0), pos(-1.5, 1.5), ex(-6.0, 0.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Vector f = amp(gen) * gs.phi + gaussian(g, pos(gen), 0.3 + 0.2 * amp(gen), amp(gen));
    const double off = std::pow(10.0, ex(gen)) * (t % 2 ? -1.0 : 1.0);
    const double sigma = gs.lambda1 - off;
    const auto sol = solve_scalar(op, gs, sigma, f);
    const double f1 = gs.inner(f, gs.phi);
    worst = std::max(worst, std::abs(gs.inner(sol.u, gs.phi) * (gs.lambda1 - sigma) - f1) / std::abs(f1));
  }
  return {worst <= 1e-10, fmt("max |u^1 (Lambda - sigma) - f^1| / |f^1| = %.3e over 20 pairs", worst)};
}

struct ScalarSetup {
  Grid grid{Geometry::cartesian(1), 8.0, 400};
  DiscreteOperator op = assemble(grid, PotentialSpec::power(4.0));
  GroundState gs = ground_state(op);
  Vector f = gs.phi + gaussian(grid, 0.5, 0.5, 0.3);
};

Outcome scalar_blowup(const ScalarSetup& s) {
  const auto sw = scalar_sweep(s.op, s.gs, s.f, geometric_offsets(1, 6, 1), +1);
  std::vector<double> dist, c;
  bool all = true;
  for (const auto& r : sw.records) {
    dist.push_back(r.lambda_minus_sigma);
    c.push_back(r.gsp_c);
    all = all && r.certificate_holds;
  }
  const PowerFit cfit = loglog_fit(dist, c);
  const double kprime = sw.uniform_lower_constant;
  bool bound = kprime > 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) bound = bound && c[i] >= kprime / dist[i];
  const bool slope_ok = std::abs(sw.fit.exponent + 1.0) <= 0.01;
  const bool tight = kprime >= 0.9 * cfit.prefactor;
  return {slope_ok && all && bound && tight,
          fmt("slope = %.5f", sw.fit.exponent) + fmt(", k' = %.5e", kprime) +
              fmt(" (fit prefactor %.5e)", cfit.prefactor) + ", GSP at every sigma: " +
              (all ? "yes" : "no")};
}

Outcome gsn_window(const ScalarSetup& s) {
  const double sigma = s.gs.lambda1 + 1e-3;
  const auto sol = solve_scalar(s.op, s.gs, sigma, s.f);
  const auto certs = certify(sol, s.gs, sigma, s.f);
  const auto* gsn = find_certificate(certs, CertificateKind::gsn);
  const auto est = estimate_delta(s.op, s.gs, s.f);
  const bool ok = gsn && gsn->holds && gsn->lower > 0.0 && est.delta > 0.0 &&
                  est.delta <= s.gs.gap();
  return {ok, fmt("c' = %.5e", gsn ? gsn->lower : 0.0) + fmt(", delta = %.6e", est.delta) +
                  fmt(", Lambda2 - Lambda = %.6e", s.gs.gap())};
}

Outcome jordan_reconstruction() {
  std::mt19937 gen(99);
  std::uniform_real_distribution<double> u(-5.0, 5.0), pos(0.05, 5.0);
  double worst = 0.0;
  int doubles = 0;
  for (int t = 0; t < 1000; ++t) {
    CouplingMatrix A{u(gen), pos(gen), 0.0, u(gen)};
    const double cmin = -(A.a - A.d) * (A.a - A.d) / (4.0 * A.b);
    if (t % 5 == 0) {
      if (A.a == A.d) A.d += 1.0;
      A.c = -(A.a - A.d) * (A.a - A.d) / (4.0 * A.b);
    } else {
      A.c = cmin + pos(gen);
    }
    const auto m = analyze(A);
    if (m.kind == EigenCase::double_eigenvalue) ++doubles;
    worst = std::max(worst, (m.reconstruct() - A.matrix()).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12 && doubles >= 100,
          fmt("max |PJP^-1 - A| = %.3e", worst) + ", double-eigenvalue cases: " + std::to_string(doubles)};
}

Outcome system_oracle() {
  Grid g(Geometry::cartesian(1), 8.0, 200);
  const auto op = assemble(g, PotentialSpec::power(4.0));
  const auto gs = ground_state(op);
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.2, 2.0), ex(-2.0, 0.0);
  double worst[3] = {0, 0, 0};
  for (int kind = 0; kind < 3; ++kind) {
    for (int t = 0; t < 10; ++t) {
      CouplingMatrix A{u(gen), pos(gen), 0.0, u(gen)};
      const double cmin = -(A.a - A.d) * (A.a - A.d) / (4.0 * A.b);
      if (kind == 0) A.c = pos(gen);
      if (kind == 1) A.c = cmin * (0.1 + 0.8 * (u(gen) + 2.0) / 4.0);
      if (kind == 2) {
        if (std::abs(A.a - A.d) < 0.2) A.d = A.a + 0.5;
        A.c = -(A.a - A.d) * (A.a - A.d) / (4.0 * A.b);
      }
      const auto m = analyze(A);
      const double mu = gs.lambda1 - m.xi1 + (t % 3 == 2 ? 1.0 : -1.0) * std::pow(10.0, ex(gen));
      const SystemProblem prob{mu, Vector(pos(gen) * gs.phi + gaussian(g, u(gen) / 2.0, 0.5, u(gen))),
                               Vector(pos(gen) * gs.phi + gaussian(g, u(gen) / 2.0, 0.4, u(gen)))};
      const auto s = solve_system(op, gs, m, prob);
      const auto d = solve_direct_coupled(op, gs, m, prob);
      worst[kind] = std::max({worst[kind], relative_x_diff(s.u1, d.u1, gs.phi),
                              relative_x_diff(s.u2, d.u2, gs.phi)});
    }
  }
  const double w = std::max({worst[0], worst[1], worst[2]});
  return {w <= 1e-8, fmt("max relative X-norm gap: cooperative %.2e", worst[0]) +
                         fmt(", non-cooperative %.2e", worst[1]) + fmt(", double %.2e", worst[2])};
}

struct SystemSetup {
  Grid grid{Geometry::cartesian(1), 8.0, 400};
  DiscreteOperator op = assemble(grid, PotentialSpec::power(4.0));
  GroundState gs = ground_state(op);
};

Outcome distinct_sign_pattern(const SystemSetup& s) {
  const auto m = analyze({0, 1, 1, 1});
  const double nu = s.gs.lambda1 - m.xi1;
  bool ok = true;
  std::string detail;
  for (int side : {+1, -1}) {
    const auto sw = blowup_sweep(s.op, s.gs, m, s.gs.phi, s.gs.phi,
                                 sweep_schedule(nu, geometric_offsets(1, 6, 1), side), 2);
    const auto sol = solve_system(s.op, s.gs, m, {nu - side * 1e-4, s.gs.phi, s.gs.phi});
    const bool signs = sol.ratios1.sign == side && sol.ratios2.sign == side;
    const bool lower = sol.ratios1.abs_min >= 0.9 * sw.fit[0].gamma / 1e-4 &&
                       sol.ratios2.abs_min >= 0.9 * sw.fit[1].gamma / 1e-4;
    const bool slope = std::abs(sw.fit[0].slope + 1.0) <= 0.01 && std::abs(sw.fit[1].slope + 1.0) <= 0.01;
    ok = ok && signs && lower && slope;
    detail += std::string(side > 0 ? "below" : "above") + ": signs " +
              to_string(SignPattern{sol.ratios1.sign, sol.ratios2.sign}) +
              fmt(", slopes %.5f", sw.fit[0].slope) + fmt("/%.5f", sw.fit[1].slope) +
              fmt(", min ratio / (gamma/|nu-mu|) = %.3f", sol.ratios1.abs_min * 1e-4 / sw.fit[0].gamma) +
              (side > 0 ? "; " : "");
  }
  return {ok, detail};
}

Outcome double_sign_pattern(const SystemSetup& s) {
  const auto m = analyze({1, 1, -1, -1});
  const double nu = s.gs.lambda1 - m.xi1;
  const auto below = solve_system(s.op, s.gs, m, {nu - 1e-4, s.gs.phi, s.gs.phi});
  const auto above = solve_system(s.op, s.gs, m, {nu + 1e-4, s.gs.phi, s.gs.phi});
  const bool below_ok = below.ratios1.sign == 1 && below.ratios2.sign == -1;
  const bool above_ok = above.ratios1.sign == -1 && above.ratios2.sign == 1;
  const auto sw = blowup_sweep(s.op, s.gs, m, s.gs.phi, s.gs.phi,
                               sweep_schedule(nu, geometric_offsets(1, 6, 1), +1), 2);
  const bool slope_ok = std::abs(sw.fit[0].slope + 2.0) <= 0.02 && std::abs(sw.fit[1].slope + 2.0) <= 0.02;
  double hand = 0.0;
  for (double off : {1e-2, 1e-4}) {
    const auto sol = solve_system(s.op, s.gs, m, {nu - off, s.gs.phi, s.gs.phi});
    const Vector expect = 2.0 * s.gs.phi / off;
    hand = std::max(hand, (sol.tilde_u2 - expect).norm() / expect.norm());
  }
  return {below_ok && above_ok && slope_ok && hand <= 1e-10,
          "below nu signs " + to_string(SignPattern{below.ratios1.sign, below.ratios2.sign}) +
              ", above nu signs " + to_string(SignPattern{above.ratios1.sign, above.ratios2.sign}) +
              " (expected (-, +))" + fmt(", slopes %.5f", sw.fit[0].slope) +
              fmt("/%.5f", sw.fit[1].slope) + fmt(", |u~2 - 2 phi/(nu-mu)| rel %.2e", hand)};
}

Outcome hypothesis_discrimination() {
  Grid radial(Geometry::radial(1), 40.0, 2000);
  const bool quartic = check_class_P(PotentialSpec::power(4.0), radial, 1.0).member;
  const bool harmonic = check_class_P(PotentialSpec::polynomial({1.0, 0.0, 1.0}), radial, 1.0).member;
  Grid box(Geometry::cartesian(1), 16.0, 1600);
  const auto q = PotentialSpec::perturbed(PotentialSpec::power(4.0), 0.1);
  const auto sw = check_sandwich(q, PotentialSpec::power(4.0, 0.9), PotentialSpec::power(4.0, 1.1), box, 1.0);
  return {quartic && !harmonic && sw.holds && sw.C0 <= 1.23,
          std::string("r^4 member: ") + (quartic ? "yes" : "no") + ", 1 + r^2 member: " +
              (harmonic ? "yes" : "no") + ", sandwich holds: " + (sw.holds ? "yes" : "no") +
              fmt(" (C0 = %.6f", sw.C0) + ", pointwise " + (sw.pointwise_ok ? "ok" : "violated") +
              fmt(", perturbation integrand ~ s^%.3f)", sw.integrand_exponent)};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "gsblow_acceptance_determinism";
  fs::remove_all(base);
  const std::string cfg = std::string(GSBLOW_CONFIG_DIR) + "/thss.cfg";
  std::ostringstream sink;
  std::string files[2];
  int codes[2];
  for (int run = 0; run < 2; ++run) {
    const std::string dir = (base / std::to_string(run)).string();
    const std::string threads = run == 0 ? "1" : "4";
    const char* argv[] = {"gsblow", "sweep", "--config", cfg.c_str(), "--out", dir.c_str(),
                          "--threads", threads.c_str()};
    codes[run] = cli::run(8, argv, sink, sink);
    std::ifstream in(base / std::to_string(run) / "sweep.csv", std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[run] = s.str();
  }
  fs::remove_all(base);
  const bool ok = codes[0] == 0 && codes[1] == 0 && !files[0].empty() && files[0] == files[1];
  return {ok, "two sweep runs (1 and 4 threads), " + std::to_string(files[0].size()) + " bytes, " +
                  (files[0] == files[1] ? "identical" : "different")};
}

}  // namespace

int main() {
  std::unique_ptr<ScalarSetup> scalar;
  std::unique_ptr<SystemSetup> system;
  auto scalar_setup = [&]() -> const ScalarSetup& {
    if (!scalar) scalar = std::make_unique<ScalarSetup>();
    return *scalar;
  };
  auto system_setup = [&]() -> const SystemSetup& {
    if (!system) system = std::make_unique<SystemSetup>();
    return *system;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"eigensolver accuracy and second-order convergence", eigensolver_accuracy},
      {"sparse ground state matches dense oracle", spectrum_oracle},
      {"pole identity of the ground-state coefficient", pole_identity},
      {"scalar blow-up law below Lambda", [&] { return scalar_blowup(scalar_setup()); }},
      {"ground-state negativity window above Lambda", [&] { return gsn_window(scalar_setup()); }},
      {"Jordan reconstruction of random coupling matrices", jordan_reconstruction},
      {"system solve matches direct coupled solve", system_oracle},
      {"distinct-eigenvalue sign pattern and rate", [&] { return distinct_sign_pattern(system_setup()); }},
      {"double-eigenvalue sign pattern and rate", [&] { return double_sign_pattern(system_setup()); }},
      {"hypothesis checker discrimination", hypothesis_discrimination},
      {"sweep output is deterministic", determinism},
  };

  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, checks[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu passed\n", checks.size() - static_cast<std::size_t>(failed), checks.size());
  return failed == 0 ? 0 : 1;
}
