#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gsblow/error.hpp"
#include "gsblow/grid.hpp"
#include "gsblow/potential.hpp"
#include "gsblow/spectrum.hpp"
#include "gsblow/system_solver.hpp"

namespace gsblow {

/// Malformed run configuration. what() is "path:line: message".
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Flat INI file: [section] headers, key = value lines, '#' or ';' comments.
/// Every entry remembers its line for diagnostics.
class IniFile {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static IniFile parse(std::istream& in, std::string path) {
    IniFile ini;
    ini.path_ = std::move(path);
    std::string raw, section;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      const std::string line = trim(strip_comment(raw));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3)
          throw ConfigError(ini.where(lineno) + "malformed section header '" + line + "'");
        section = lower(trim(line.substr(1, line.size() - 2)));
        if (ini.sections_.count(section))
          throw ConfigError(ini.where(lineno) + "duplicate section [" + section + "]");
        ini.sections_[section] = {};
        ini.section_lines_[section] = lineno;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(ini.where(lineno) + "expected 'key = value', got '" + line + "'");
      if (section.empty())
        throw ConfigError(ini.where(lineno) + "key outside of any [section]");
      const std::string key = lower(trim(line.substr(0, eq)));
      if (key.empty()) throw ConfigError(ini.where(lineno) + "empty key");
      auto& sec = ini.sections_[section];
      if (sec.count(key))
        throw ConfigError(ini.where(lineno) + "duplicate key '" + key + "' in [" + section + "]");
      sec[key] = {trim(line.substr(eq + 1)), lineno};
    }
    return ini;
  }

  static IniFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open configuration");
    return parse(in, path.string());
  }

  const std::string& path() const { return path_; }
  bool has(const std::string& section) const { return sections_.count(section) > 0; }
  bool has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
  }
  std::size_t section_line(const std::string& section) const {
    auto it = section_lines_.find(section);
    return it == section_lines_.end() ? 0 : it->second;
  }

  std::string where(std::size_t line) const {
    return path_ + ":" + (line ? std::to_string(line) : std::string("?")) + ": ";
  }

  void require_section(const std::string& section, const std::string& why) const {
    if (!has(section))
      throw ConfigError(path_ + ": missing section [" + section + "] (" + why + ")");
  }

  /// Rejects keys not in `allowed`.
  void restrict_keys(const std::string& section, const std::set<std::string>& allowed) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return;
    for (const auto& [key, e] : it->second)
      if (!allowed.count(key))
        throw ConfigError(where(e.line) + "unknown key '" + key + "' in [" + section + "]");
  }

  void restrict_sections(const std::set<std::string>& allowed) const {
    for (const auto& [name, _] : sections_)
      if (!allowed.count(name))
        throw ConfigError(where(section_line(name)) + "unknown section [" + name + "]");
  }

  const Entry& entry(const std::string& section, const std::string& key) const {
    if (!has(section, key))
      throw ConfigError(where(section_line(section)) + "missing key '" + key + "' in [" + section +
                        "]");
    return sections_.at(section).at(key);
  }

  std::string text(const std::string& section, const std::string& key) const {
    return entry(section, key).value;
  }
  std::string text(const std::string& section, const std::string& key,
                   const std::string& fallback) const {
    return has(section, key) ? text(section, key) : fallback;
  }

  double number(const std::string& section, const std::string& key) const {
    const Entry& e = entry(section, key);
    return to_number(e, key);
  }
  double number(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
  }

  long integer(const std::string& section, const std::string& key) const {
    const Entry& e = entry(section, key);
    const double v = to_number(e, key);
    if (v != std::floor(v) || std::abs(v) > 1e15)
      throw ConfigError(where(e.line) + "'" + key + "' must be an integer, got '" + e.value + "'");
    return static_cast<long>(v);
  }
  long integer(const std::string& section, const std::string& key, long fallback) const {
    return has(section, key) ? integer(section, key) : fallback;
  }

  std::vector<double> numbers(const std::string& section, const std::string& key) const {
    const Entry& e = entry(section, key);
    std::vector<double> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number({trim(item), e.line}, key));
    if (out.empty()) throw ConfigError(where(e.line) + "'" + key + "' needs at least one value");
    return out;
  }

  bool flag(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const Entry& e = entry(section, key);
    const std::string v = lower(e.value);
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ConfigError(where(e.line) + "'" + key + "' must be true or false, got '" + e.value + "'");
  }

  std::size_t line(const std::string& section, const std::string& key) const {
    return entry(section, key).line;
  }

  static std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  }

 private:
  static std::string strip_comment(const std::string& s) {
    const auto pos = s.find_first_of("#;");
    return pos == std::string::npos ? s : s.substr(0, pos);
  }
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
  double to_number(const Entry& e, const std::string& key) const {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(e.value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != e.value.size() || !std::isfinite(v))
      throw ConfigError(where(e.line) + "'" + key + "' expects a number, got '" + e.value + "'");
    return v;
  }

  std::string path_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, std::size_t> section_lines_;
};

/// Right-hand side: phi multiple + Gaussian bump + tabulated profile, any subset.
struct SourceSpec {
  double phi = 0.0;
  struct Bump {
    double center = 0.0;
    double width = 1.0;
    double amplitude = 1.0;
  };
  std::optional<Bump> bump;
  /// Profile sampled at |x| (radial) or x_1 (1D), linear interpolation, zero outside.
  std::vector<double> table_x;
  std::vector<double> table_value;

  bool empty() const { return phi == 0.0 && !bump && table_x.empty(); }
};

/// Evaluates a source on the grid; needs the ground state for the phi part.
inline Vector build_source(const SourceSpec& s, const Grid& grid, const GroundState& gs) {
  Vector f = s.phi * gs.phi;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const double x1 = grid.coordinate(k, 0);
    const double x2 = grid.geometry().dim == 2 && !grid.geometry().is_radial() ? grid.coordinate(k, 1) : 0.0;
    if (s.bump) {
      const double dx = x1 - s.bump->center;
      const double r2 = dx * dx + x2 * x2;
      f[i] += s.bump->amplitude * std::exp(-r2 / (2.0 * s.bump->width * s.bump->width));
    }
    if (!s.table_x.empty()) {
      const double t = grid.geometry().dim == 2 ? grid.radius(k) : x1;
      const auto& xs = s.table_x;
      if (t >= xs.front() && t <= xs.back()) {
        auto it = std::upper_bound(xs.begin(), xs.end(), t);
        std::size_t j = it == xs.end() ? xs.size() - 1 : static_cast<std::size_t>(it - xs.begin());
        if (j == 0) j = 1;
        const double w = (t - xs[j - 1]) / (xs[j] - xs[j - 1]);
        f[i] += (1.0 - w) * s.table_value[j - 1] + w * s.table_value[j];
      }
    }
  }
  return f;
}

enum class SweepSide { below, above, both };

/// Everything a command needs, validated.
struct RunConfig {
  std::string path;
  Geometry geometry = Geometry::cartesian(1);
  double r_max = 10.0;
  std::size_t n = 200;
  PotentialSpec potential = PotentialSpec::zero();
  std::optional<PotentialSpec> Q1;
  std::optional<PotentialSpec> Q2;
  double r0 = 1.0;
  std::optional<CouplingMatrix> matrix;
  SourceSpec source1;
  SourceSpec source2;
  std::vector<double> sigmas;
  std::vector<double> offsets;
  SweepSide side = SweepSide::below;
  std::optional<double> mu;
  std::optional<double> mu_offset;
  bool estimate_delta = false;
  int eigenpairs = 2;
  double eigen_tol = 1e-8;
  double solver_tol = 1e-13;
  std::string output_dir = ".";
};

namespace detail {

inline PotentialSpec parse_potential(const IniFile& ini, const std::string& sec,
                                     const std::filesystem::path& base_dir) {
  ini.restrict_keys(sec, {"kind", "alpha", "scale", "shift", "coeffs", "rate", "file", "base",
                          "amplitude", "frequency", "factor", "offset"});
  auto build_radial = [&](const std::string& kind, std::size_t line) -> PotentialSpec {
    if (kind == "power")
      return PotentialSpec::power(ini.number(sec, "alpha"), ini.number(sec, "scale", 1.0),
                                  ini.number(sec, "shift", 0.0));
    if (kind == "polynomial") return PotentialSpec::polynomial(ini.numbers(sec, "coeffs"));
    if (kind == "exponential")
      return PotentialSpec::exponential(ini.number(sec, "rate"), ini.number(sec, "scale", 1.0));
    if (kind == "tabulated") {
      std::filesystem::path file = ini.text(sec, "file");
      if (file.is_relative()) file = base_dir / file;
      try {
        return load_tabulated(file.string());
      } catch (const Error& e) {
        throw ConfigError(ini.where(ini.line(sec, "file")) + e.what());
      }
    }
    if (kind == "zero") return PotentialSpec::zero();
    throw ConfigError(ini.where(line) + "unknown potential kind '" + kind +
                      "' (power, polynomial, exponential, tabulated, perturbed, zero)");
  };
  const std::string kind = IniFile::lower(ini.text(sec, "kind"));
  const std::size_t line = ini.line(sec, "kind");
  try {
    PotentialSpec p = PotentialSpec::zero();
    if (kind == "perturbed") {
      const std::string base = IniFile::lower(ini.text(sec, "base", "power"));
      p = PotentialSpec::perturbed(build_radial(base, line), ini.number(sec, "amplitude"),
                                   ini.number(sec, "frequency", 1.0));
    } else {
      p = build_radial(kind, line);
    }
    return p.scaled(ini.number(sec, "factor", 1.0)).shifted(ini.number(sec, "offset", 0.0));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(ini.where(ini.section_line(sec)) + "[" + sec + "]: " + e.what());
  }
}

inline SourceSpec parse_source(const IniFile& ini, const std::string& sec,
                               const std::filesystem::path& base_dir) {
  ini.restrict_keys(sec, {"phi", "bump", "table"});
  SourceSpec s;
  s.phi = ini.number(sec, "phi", 0.0);
  if (ini.has(sec, "bump")) {
    const auto v = ini.numbers(sec, "bump");
    if (v.size() != 3 || !(v[1] > 0.0))
      throw ConfigError(ini.where(ini.line(sec, "bump")) +
                        "bump = center, width, amplitude with width > 0");
    s.bump = SourceSpec::Bump{v[0], v[1], v[2]};
  }
  if (ini.has(sec, "table")) {
    std::filesystem::path file = ini.text(sec, "table");
    if (file.is_relative()) file = base_dir / file;
    try {
      auto [x, y] = read_two_column_csv(file.string());
      if (x.size() < 2 || !std::is_sorted(x.begin(), x.end()))
        throw InvalidArgument("table needs at least two rows in increasing order");
      s.table_x = std::move(x);
      s.table_value = std::move(y);
    } catch (const Error& e) {
      throw ConfigError(ini.where(ini.line(sec, "table")) + e.what());
    }
  }
  if (s.empty())
    throw ConfigError(ini.where(ini.section_line(sec)) + "[" + sec +
                      "] defines no source (phi, bump or table)");
  return s;
}

}  // namespace detail

/// Reads and validates a configuration for `command`.
inline RunConfig parse_config(const IniFile& ini, const std::string& command) {
  RunConfig cfg;
  cfg.path = ini.path();
  const std::filesystem::path base_dir = std::filesystem::path(ini.path()).parent_path();
  ini.restrict_sections({"grid", "potential", "q1", "q2", "hypotheses", "matrix", "source",
                         "source1", "source2", "parameters", "tolerances", "output"});

  ini.require_section("grid", "every command needs a grid");
  ini.restrict_keys("grid", {"geometry", "dim", "r_max", "n"});
  const std::string geom = IniFile::lower(ini.text("grid", "geometry", "cartesian"));
  const long dim = ini.integer("grid", "dim", 1);
  if (geom == "radial")
    cfg.geometry = Geometry::radial(static_cast<int>(dim));
  else if (geom == "cartesian")
    cfg.geometry = Geometry::cartesian(static_cast<int>(dim));
  else
    throw ConfigError(ini.where(ini.line("grid", "geometry")) + "geometry must be radial or cartesian");
  cfg.r_max = ini.number("grid", "r_max");
  const long n = ini.integer("grid", "n");
  if (n < static_cast<long>(min_grid_points))
    throw ConfigError(ini.where(ini.line("grid", "n")) + "n must be at least " +
                      std::to_string(min_grid_points));
  cfg.n = static_cast<std::size_t>(n);
  try {
    (void)Grid(cfg.geometry, cfg.r_max, cfg.n);
  } catch (const Error& e) {
    throw ConfigError(ini.where(ini.section_line("grid")) + e.what());
  }

  if (ini.has("potential")) cfg.potential = detail::parse_potential(ini, "potential", base_dir);
  if (ini.has("q1")) cfg.Q1 = detail::parse_potential(ini, "q1", base_dir);
  if (ini.has("q2")) cfg.Q2 = detail::parse_potential(ini, "q2", base_dir);
  if (cfg.Q1.has_value() != cfg.Q2.has_value())
    throw ConfigError(ini.where(ini.section_line(cfg.Q1 ? "q1" : "q2")) +
                      "[Q1] and [Q2] must be given together");

  ini.restrict_keys("hypotheses", {"r0"});
  cfg.r0 = ini.number("hypotheses", "r0", 1.0);

  if (ini.has("matrix")) {
    ini.restrict_keys("matrix", {"a", "b", "c", "d"});
    cfg.matrix = CouplingMatrix{ini.number("matrix", "a"), ini.number("matrix", "b"),
                                ini.number("matrix", "c"), ini.number("matrix", "d")};
  }

  if (ini.has("source") && ini.has("source1"))
    throw ConfigError(ini.where(ini.section_line("source1")) + "[source] and [source1] are aliases; give one");
  if (ini.has("source")) cfg.source1 = detail::parse_source(ini, "source", base_dir);
  if (ini.has("source1")) cfg.source1 = detail::parse_source(ini, "source1", base_dir);
  if (ini.has("source2")) cfg.source2 = detail::parse_source(ini, "source2", base_dir);

  ini.restrict_keys("parameters",
                    {"sigma", "sigmas", "offsets", "side", "mu", "mu_offset", "estimate_delta", "k"});
  if (ini.has("parameters", "sigma") && ini.has("parameters", "sigmas"))
    throw ConfigError(ini.where(ini.line("parameters", "sigmas")) + "give sigma or sigmas, not both");
  if (ini.has("parameters", "sigma")) cfg.sigmas = {ini.number("parameters", "sigma")};
  if (ini.has("parameters", "sigmas")) cfg.sigmas = ini.numbers("parameters", "sigmas");
  if (ini.has("parameters", "offsets")) {
    cfg.offsets = ini.numbers("parameters", "offsets");
    for (double o : cfg.offsets)
      if (!(o > 0.0))
        throw ConfigError(ini.where(ini.line("parameters", "offsets")) + "offsets must be positive");
  }
  const std::string side = IniFile::lower(ini.text("parameters", "side", "below"));
  if (side == "below")
    cfg.side = SweepSide::below;
  else if (side == "above")
    cfg.side = SweepSide::above;
  else if (side == "both")
    cfg.side = SweepSide::both;
  else
    throw ConfigError(ini.where(ini.line("parameters", "side")) + "side must be below, above or both");
  if (ini.has("parameters", "mu") && ini.has("parameters", "mu_offset"))
    throw ConfigError(ini.where(ini.line("parameters", "mu_offset")) + "give mu or mu_offset, not both");
  if (ini.has("parameters", "mu")) cfg.mu = ini.number("parameters", "mu");
  if (ini.has("parameters", "mu_offset")) cfg.mu_offset = ini.number("parameters", "mu_offset");
  cfg.estimate_delta = ini.flag("parameters", "estimate_delta", false);
  cfg.eigenpairs = static_cast<int>(ini.integer("parameters", "k", 2));
  if (cfg.eigenpairs < 1 || cfg.eigenpairs > 8)
    throw ConfigError(ini.where(ini.line("parameters", "k")) + "k must be between 1 and 8");

  ini.restrict_keys("tolerances", {"eigen", "solver"});
  cfg.eigen_tol = ini.number("tolerances", "eigen", 1e-8);
  cfg.solver_tol = ini.number("tolerances", "solver", 1e-13);
  for (const char* key : {"eigen", "solver"})
    if (ini.has("tolerances", key) && !(ini.number("tolerances", key) > 0.0))
      throw ConfigError(ini.where(ini.line("tolerances", key)) + "tolerances must be positive");

  ini.restrict_keys("output", {"dir"});
  cfg.output_dir = ini.text("output", "dir", ".");

  // per-command requirements
  auto need = [&](bool ok, const std::string& section, const std::string& why) {
    if (!ok) throw ConfigError(ini.path() + ": missing [" + section + "] (" + why + ")");
  };
  if (command == "eigen") {
    need(ini.has("potential"), "potential", "eigen needs q");
  } else if (command == "scalar") {
    need(ini.has("potential"), "potential", "scalar needs q");
    need(ini.has("source") || ini.has("source1"), "source", "scalar needs f");
    if (cfg.sigmas.empty() && cfg.offsets.empty())
      throw ConfigError(ini.where(ini.section_line("parameters")) +
                        "scalar needs sigma, sigmas or offsets in [parameters]");
  } else if (command == "system" || command == "sweep") {
    need(ini.has("potential"), "potential", command + " needs q");
    need(ini.has("matrix"), "matrix", command + " needs A");
    need(ini.has("source1") || ini.has("source"), "source1", command + " needs f1");
    need(ini.has("source2"), "source2", command + " needs f2");
    if (command == "system" && !cfg.mu && !cfg.mu_offset)
      throw ConfigError(ini.where(ini.section_line("parameters")) +
                        "system needs mu or mu_offset in [parameters]");
  } else if (command == "hypotheses") {
    if (!ini.has("potential") && !ini.has("q1"))
      throw ConfigError(ini.path() + ": hypotheses needs [potential] or [Q1]/[Q2]");
  } else {
    throw ConfigError(ini.path() + ": unknown command '" + command + "'");
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path, const std::string& command) {
  return parse_config(IniFile::load(path), command);
}

}  // namespace gsblow
