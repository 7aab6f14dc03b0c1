#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gsblow/config.hpp"
#include "gsblow/error.hpp"
#include "gsblow/grid.hpp"
#include "gsblow/hypotheses.hpp"
#include "gsblow/io.hpp"
#include "gsblow/operator.hpp"
#include "gsblow/scalar_solver.hpp"
#include "gsblow/spectrum.hpp"
#include "gsblow/system_solver.hpp"

namespace gsblow::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_solver = 1,
  exit_hypothesis = 2,
  exit_usage = 64,
};

inline const std::vector<std::string> commands = {"eigen", "scalar", "system", "sweep", "hypotheses"};

/// What a command produced, before it is written to disk.
struct Artifacts {
  std::string csv;
  io::Report report;
  std::string plot;
  int status = exit_ok;
};

namespace detail {

inline std::string matrix_text(const Matrix2& m) {
  return "(" + io::format_number(m(0, 0)) + ", " + io::format_number(m(0, 1)) + "; " +
         io::format_number(m(1, 0)) + ", " + io::format_number(m(1, 1)) + ")";
}

struct Setup {
  Grid grid;
  DiscreteOperator op;
  GroundState gs;
};

inline Setup setup(const RunConfig& cfg) {
  Grid grid(cfg.geometry, cfg.r_max, cfg.n);
  DiscreteOperator op = assemble(grid, cfg.potential);
  GroundState gs = ground_state(op, cfg.eigen_tol);
  return {grid, op, gs};
}

inline ScalarOptions scalar_options(const RunConfig& cfg) {
  ScalarOptions opt;
  opt.rel_tol = cfg.solver_tol;
  return opt;
}

inline void describe_problem(const RunConfig& cfg, const Setup& s, io::Report& rep) {
  rep.add("geometry", cfg.geometry.describe());
  rep.add("r_max", cfg.r_max);
  rep.add("n", cfg.n);
  rep.add("h", s.grid.h());
  rep.add("potential", cfg.potential.describe());
  rep.add("lambda1", s.gs.lambda1);
  rep.add("lambda2", s.gs.lambda2);
  rep.add("eigen_residual", s.gs.residual);
}

inline Artifacts run_eigen(const RunConfig& cfg) {
  Artifacts a;
  const Setup s = setup(cfg);
  describe_problem(cfg, s, a.report);
  a.report.add("gap", s.gs.gap());
  if (cfg.eigenpairs > 2) {
    const auto pairs = lowest_k(s.op, cfg.eigenpairs, cfg.eigen_tol);
    for (std::size_t j = 0; j < pairs.size(); ++j)
      a.report.add("lambda_" + std::to_string(j + 1), pairs[j].value);
  }
  if (cfg.potential.is_radial())
    a.report.add("truncation_ok", truncation_ok(s.grid, cfg.potential, s.gs.lambda1));
  if (cfg.Q1 && cfg.Q2) {
    const GroundState g1 = ground_state(assemble(s.grid, *cfg.Q1), cfg.eigen_tol);
    const GroundState g2 = ground_state(assemble(s.grid, *cfg.Q2), cfg.eigen_tol);
    const Comparability c = check_comparability(s.gs, g1, g2);
    a.report.add("comparability_k1", c.k1);
    a.report.add("comparability_k2", c.k2);
    a.report.add("comparability_holds", c.holds);
  }

  const bool two_d = !cfg.geometry.is_radial() && cfg.geometry.dim == 2;
  const auto& cols = two_d ? io::eigen_columns_2d
                           : (cfg.geometry.is_radial() ? io::eigen_columns_radial : io::eigen_columns_1d);
  io::CsvWriter csv(cols);
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    const double phi = s.gs.phi[static_cast<Eigen::Index>(k)];
    if (two_d)
      csv.row({k, s.grid.coordinate(k, 0), s.grid.coordinate(k, 1), phi});
    else
      csv.row({k, s.grid.coordinate(k, 0), phi});
  }
  a.csv = csv.str();
  if (two_d)
    a.plot = "set datafile separator ','\nset key autotitle columnhead\nset title 'ground state'\n"
             "splot 'eigen.csv' using 2:3:4 with points pointtype 7 pointsize 0.3 title 'phi'\n";
  else
    a.plot = io::gnuplot_script("eigen.csv", cols, {{cols[1], "phi", "phi", false}}, false, false,
                                "ground state");
  return a;
}

inline Artifacts run_scalar(const RunConfig& cfg) {
  Artifacts a;
  const Setup s = setup(cfg);
  describe_problem(cfg, s, a.report);
  const Vector f = build_source(cfg.source1, s.grid, s.gs);
  const ScalarOptions opt = scalar_options(cfg);
  const SpectralSplit split = project(f, s.gs);
  const XNorm fx = x_norm(f, s.gs);
  a.report.add("f1", split.c1);
  a.report.add("x_norm_f", fx.value);
  a.report.add("f_ground_state_bounded", fx.finite);
  // Sign conclusions for a source that changes sign but has f1 > 0 rest on the
  // weaker assumption only; label them so they are not read as the general case.
  const bool f_nonnegative = (f.array() >= 0.0).all() && (f.array() > 0.0).any();
  a.report.add("f_nonnegative", f_nonnegative);
  a.report.add("sign_basis", std::string(f_nonnegative ? "theorem"
                                         : split.c1 > 0.0 ? "remark (f1 > 0 only)"
                                                          : "none"));

  io::CsvWriter csv(io::scalar_columns);
  bool all_hold = true;
  auto emit = [&](double sigma) {
    const ScalarSolution sol = solve_scalar(s.op, s.gs, sigma, f, opt);
    const auto certs = certify(sol, s.gs, sigma, f);
    const Certificate& c = certs.front();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const bool below = sigma < s.gs.lambda1;
    csv.row({sigma, s.gs.lambda1 - sigma, sol.u1, sol.x_norm_u, below ? c.lower : nan,
             below ? nan : c.lower, sol.deflated_residual});
    all_hold = all_hold && c.holds;
    return sol;
  };
  for (double sigma : cfg.sigmas) emit(sigma);
  for (int side : {+1, -1}) {
    if (cfg.offsets.empty()) break;
    if ((side > 0 && cfg.side == SweepSide::above) || (side < 0 && cfg.side == SweepSide::below))
      continue;
    const ScalarSweepResult sw = scalar_sweep(s.op, s.gs, f, cfg.offsets, side, opt);
    for (const auto& r : sw.records) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      csv.row({r.sigma, r.lambda_minus_sigma, r.u1, r.x_norm_u, side > 0 ? r.gsp_c : nan,
               side > 0 ? nan : r.gsn_cprime, r.residual});
      all_hold = all_hold && r.certificate_holds;
    }
    const std::string tag = side > 0 ? "below" : "above";
    a.report.add("slope_" + tag, sw.fit.exponent);
    a.report.add("uniform_constant_" + tag, sw.uniform_lower_constant);
  }
  a.report.add("certificates_hold", all_hold);
  if (cfg.estimate_delta) {
    const DeltaEstimate d = estimate_delta(s.op, s.gs, f, opt);
    a.report.add("delta", d.delta);
    a.report.add("delta_window", d.window);
    a.report.add("delta_diagnostic", d.diagnostic);
  }
  a.csv = csv.str();
  a.plot = io::gnuplot_script("scalar.csv", io::scalar_columns,
                              {{"lambda_minus_sigma", "x_norm_u", "max |u|/phi", false}}, true, true,
                              "resolvent blow-up");
  return a;
}

inline void describe_matrix(const MatrixAnalysis& ma, io::Report& rep) {
  rep.add("matrix", matrix_text(ma.original.matrix()));
  rep.add("equations_swapped", ma.swapped);
  rep.add("discriminant", ma.D);
  rep.add("xi1", ma.xi1);
  rep.add("xi2", ma.xi2);
  rep.add("case", std::string(ma.kind == EigenCase::distinct ? "distinct" : "double"));
  rep.add("cooperative", ma.cooperative);
  rep.add("P", matrix_text(ma.P));
  rep.add("Pinv", matrix_text(ma.Pinv));
}

inline Artifacts run_system(const RunConfig& cfg) {
  Artifacts a;
  const Setup s = setup(cfg);
  describe_problem(cfg, s, a.report);
  const MatrixAnalysis ma = analyze(*cfg.matrix);
  describe_matrix(ma, a.report);
  const PrincipalPair pp = principal_pair(s.op, s.gs, ma);
  const AdmissibleWindow win = admissible_window(s.gs, ma);
  a.report.add("nu", pp.nu);
  a.report.add("principal_residual", pp.residual);
  a.report.add("pole_secondary", win.pole_secondary);
  a.report.add("deflation_bound", win.deflation_bound);

  const double mu = cfg.mu ? *cfg.mu : pp.nu + *cfg.mu_offset;
  a.report.add("mu", mu);
  SystemProblem prob{mu, build_source(cfg.source1, s.grid, s.gs),
                     build_source(cfg.source2, s.grid, s.gs)};
  const ConditionReport cond = check_theorem_conditions(ma, prob, s.gs);
  a.report.add("conditions", cond.summary);

  const SystemSolution sol = solve_system(s.op, s.gs, ma, prob, scalar_options(cfg));
  a.report.add("residual1", sol.residual1);
  a.report.add("residual2", sol.residual2);
  a.report.add("u1_ratio_min", sol.ratios1.min);
  a.report.add("u1_ratio_max", sol.ratios1.max);
  a.report.add("u2_ratio_min", sol.ratios2.min);
  a.report.add("u2_ratio_max", sol.ratios2.max);
  const SignPattern observed{sol.ratios1.sign, sol.ratios2.sign};
  const SignPattern predicted = mu < pp.nu ? cond.predicted_below : cond.predicted_above;
  a.report.add("observed_signs", to_string(observed));
  a.report.add("predicted_signs", to_string(predicted));
  a.report.add("matches_prediction", observed == predicted);

  const bool two_d = !cfg.geometry.is_radial() && cfg.geometry.dim == 2;
  std::vector<std::string> cols = {"node", cfg.geometry.is_radial() ? "r" : "x"};
  if (two_d) cols.push_back("y");
  for (const char* c : {"u1", "u2", "phi"}) cols.push_back(c);
  io::CsvWriter csv(cols);
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    std::vector<io::Cell> row = {k, s.grid.coordinate(k, 0)};
    if (two_d) row.emplace_back(s.grid.coordinate(k, 1));
    row.emplace_back(sol.u1[i]);
    row.emplace_back(sol.u2[i]);
    row.emplace_back(s.gs.phi[i]);
    csv.row(row);
  }
  a.csv = csv.str();
  a.plot = io::gnuplot_script("system.csv", cols,
                              {{cols[1], "u1", "u1", false}, {cols[1], "u2", "u2", false}}, false,
                              false, "system solution");
  return a;
}

inline void add_sweep_rows(io::CsvWriter& csv, const SweepResult& r) {
  for (const auto& rec : r.records)
    csv.row({rec.mu, rec.nu_minus_mu, rec.side, rec.ratios1.min, rec.ratios1.max, rec.ratios2.min,
             rec.ratios2.max, rec.residual1, rec.residual2});
}

inline Artifacts run_sweep(const RunConfig& cfg, unsigned threads) {
  Artifacts a;
  const Setup s = setup(cfg);
  describe_problem(cfg, s, a.report);
  const MatrixAnalysis ma = analyze(*cfg.matrix);
  describe_matrix(ma, a.report);
  const double nu = s.gs.lambda1 - ma.xi1;
  a.report.add("nu", nu);
  const Vector f1 = build_source(cfg.source1, s.grid, s.gs);
  const Vector f2 = build_source(cfg.source2, s.grid, s.gs);
  const ConditionReport cond = check_theorem_conditions(ma, {nu, f1, f2}, s.gs);
  a.report.add("theorem", std::string(to_string(cond.branch)));
  a.report.add("f1_1", cond.f1_1);
  a.report.add("f2_1", cond.f2_1);
  a.report.add("condition_margin", cond.margin);
  a.report.add("conditions_hold", cond.applies);
  a.report.add("leading_pole_order", cond.pole_order);

  const std::vector<double> offsets = cfg.offsets.empty() ? geometric_offsets() : cfg.offsets;
  io::CsvWriter csv(io::sweep_columns);
  bool matches = true;
  for (int side : {+1, -1}) {
    if ((side > 0 && cfg.side == SweepSide::above) || (side < 0 && cfg.side == SweepSide::below))
      continue;
    const std::string tag = side > 0 ? "below" : "above";
    const SweepResult r = blowup_sweep(s.op, s.gs, ma, f1, f2, sweep_schedule(nu, offsets, side),
                                       threads, scalar_options(cfg));
    add_sweep_rows(csv, r);
    const SignPattern predicted = side > 0 ? cond.predicted_below : cond.predicted_above;
    const SignPattern stated = side > 0 ? cond.stated_below : cond.stated_above;
    a.report.add("slope_u1_" + tag, r.fit[0].slope);
    a.report.add("slope_u2_" + tag, r.fit[1].slope);
    a.report.add("gamma_u1_" + tag, r.fit[0].gamma);
    a.report.add("gamma_u2_" + tag, r.fit[1].gamma);
    a.report.add("observed_signs_" + tag, to_string(r.sign_pattern));
    a.report.add("predicted_signs_" + tag, to_string(predicted));
    if (stated != SignPattern{}) a.report.add("stated_signs_" + tag, to_string(stated));
    const bool ok = r.sign_pattern == predicted;
    a.report.add("pattern_" + tag, std::string(ok ? "pass" : "fail"));
    matches = matches && ok;
  }
  a.report.add("pattern_matches_prediction", matches);
  a.csv = csv.str();
  a.plot = io::gnuplot_script("sweep.csv", io::sweep_columns,
                              {{"nu_minus_mu", "u1_ratio_min", "min u1/phi", true},
                               {"nu_minus_mu", "u2_ratio_min", "min u2/phi", true}},
                              true, true, "system blow-up");
  return a;
}

inline Artifacts run_hypotheses(const RunConfig& cfg) {
  Artifacts a;
  const Grid grid(cfg.geometry, cfg.r_max, cfg.n);
  a.report.add("geometry", cfg.geometry.describe());
  a.report.add("r_max", cfg.r_max);
  a.report.add("n", cfg.n);
  a.report.add("r0", cfg.r0);
  bool ok = true;

  std::vector<std::pair<std::string, PotentialSpec>> profiles;
  if (cfg.potential.is_radial()) profiles.emplace_back("q", cfg.potential);
  if (cfg.Q1) profiles.emplace_back("Q1", *cfg.Q1);
  if (cfg.Q2) profiles.emplace_back("Q2", *cfg.Q2);
  for (const auto& [name, Q] : profiles) {
    const ClassPReport r = check_class_P(Q, grid, cfg.r0);
    const std::string p = name == "q" ? "" : name + " ";
    a.report.add(p + "profile", Q.describe());
    a.report.add(p + "monotone", r.monotone_ok);
    a.report.add(p + "tail_exponent", r.tail_exponent);
    a.report.add(p + "tail_integral", r.tail_integral);
    a.report.add(p + "superpolynomial", r.superpolynomial);
    a.report.add(p + "borderline", r.borderline);
    a.report.add(p + "class P membership", r.member);
    ok = ok && r.member;
  }
  if (cfg.Q1 && cfg.Q2) {
    const SandwichReport sw = check_sandwich(cfg.potential, *cfg.Q1, *cfg.Q2, grid, cfg.r0);
    a.report.add("C0", sw.C0);
    a.report.add("pointwise_ok", sw.pointwise_ok);
    a.report.add("truncated_integral", sw.truncated_integral);
    a.report.add("integrand_exponent", sw.integrand_exponent);
    a.report.add("perturbation_integral", sw.perturbation_integral);
    a.report.add("sandwich_holds", sw.holds);
    if (!sw.diagnostic.empty()) a.report.add("sandwich_diagnostic", sw.diagnostic);
    ok = ok && sw.holds;
  }

  std::vector<std::string> cols = {"r"};
  for (const auto& [name, _] : profiles) cols.push_back(name);
  io::CsvWriter csv(cols);
  for (double r : grid.radial_abscissae()) {
    std::vector<io::Cell> row = {r};
    for (const auto& [_, Q] : profiles) row.emplace_back(Q.radial(r));
    csv.row(row);
  }
  a.csv = csv.str();
  std::vector<io::PlotSeries> series;
  for (const auto& [name, _] : profiles) series.push_back({"r", name, name, false});
  a.plot = io::gnuplot_script("hypotheses.csv", cols, series, true, true, "potential profiles");
  a.status = ok ? exit_ok : exit_hypothesis;
  return a;
}

}  // namespace detail

/// Runs one command on a parsed configuration and returns its artifacts.
inline Artifacts execute(const std::string& command, const RunConfig& cfg, unsigned threads) {
  if (command == "eigen") return detail::run_eigen(cfg);
  if (command == "scalar") return detail::run_scalar(cfg);
  if (command == "system") return detail::run_system(cfg);
  if (command == "sweep") return detail::run_sweep(cfg, threads);
  if (command == "hypotheses") return detail::run_hypotheses(cfg);
  throw ConfigError("unknown command '" + command + "'");
}

inline void write_artifacts(const std::filesystem::path& dir, const std::string& command,
                            const Artifacts& a) {
  io::write_file(dir / (command + ".csv"), a.csv);
  io::write_file(dir / (command + "_report.txt"), a.report.str());
  io::write_file(dir / (command + ".gp"), a.plot);
}

/// Entry point of the gsblow executable.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Ground-state blow-up solver for -Laplacian + q"};
  app.name("gsblow");
  std::string command, config_path, out_dir;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("command", command, "eigen | scalar | system | sweep | hypotheses")
      ->required()
      ->check(CLI::IsMember(commands));
  app.add_option("--config", config_path, "run configuration (INI)")->required();
  app.add_option("--out", out_dir, "output directory (GSBLOW_OUT overrides)");
  app.add_option("--threads", threads, "workers for sweeps")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path, command);
  } catch (const ConfigError& e) {
    err << "gsblow: " << e.what() << "\n";
    return exit_usage;
  }

  std::filesystem::path dir = cfg.output_dir;
  if (!out_dir.empty()) dir = out_dir;
  if (const char* env = std::getenv("GSBLOW_OUT"); env && *env) dir = env;

  Artifacts a;
  try {
    a = execute(command, cfg, threads);
  } catch (const HypothesisError& e) {
    err << "gsblow: hypothesis check failed: " << e.what() << "\n";
    return exit_hypothesis;
  } catch (const SweepError& e) {
    err << "gsblow: " << e.what() << "\n";
    io::CsvWriter partial(io::sweep_columns);
    detail::add_sweep_rows(partial, e.partial());
    try {
      io::write_file(dir / (command + ".csv"), partial.str());
    } catch (const Error&) {
    }
    return exit_solver;
  } catch (const Error& e) {
    err << "gsblow: " << e.what() << "\n";
    return exit_solver;
  }

  try {
    write_artifacts(dir, command, a);
  } catch (const std::exception& e) {
    err << "gsblow: " << e.what() << "\n";
    return exit_solver;
  }
  out << a.report.str();
  out << "wrote " << (dir / (command + ".csv")).string() << "\n";
  return a.status;
}

}  // namespace gsblow::cli
