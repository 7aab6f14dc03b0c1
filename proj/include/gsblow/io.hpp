#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gsblow/error.hpp"
#include "gsblow/grid.hpp"

namespace gsblow::io {

inline const std::vector<std::string> eigen_columns_1d = {"node", "x", "phi"};
inline const std::vector<std::string> eigen_columns_radial = {"node", "r", "phi"};
inline const std::vector<std::string> eigen_columns_2d = {"node", "x", "y", "phi"};
inline const std::vector<std::string> scalar_columns = {
    "sigma", "lambda_minus_sigma", "u1", "x_norm_u", "gsp_c", "gsn_cprime", "residual"};
inline const std::vector<std::string> sweep_columns = {
    "mu",           "nu_minus_mu",  "side",      "u1_ratio_min", "u1_ratio_max",
    "u2_ratio_min", "u2_ratio_max", "residual1", "residual2"};
inline const std::vector<std::string> system_columns = {"node", "x", "u1", "u2", "phi"};

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

/// One CSV cell: a number in %.12e, or verbatim text.
class Cell {
 public:
  Cell(double v) : text_(format_number(v)) {}
  Cell(int v) : text_(std::to_string(v)) {}
  Cell(std::size_t v) : text_(std::to_string(v)) {}
  Cell(std::string s) : text_(std::move(s)) {}
  Cell(const char* s) : text_(s) {}
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// Comma-delimited table with a fixed header.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
    out_ << "\n";
  }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_.size())
      throw InvalidArgument("csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(columns_.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i].text();
    out_ << "\n";
  }

  const std::vector<std::string>& columns() const { return columns_; }
  std::string str() const { return out_.str(); }

 private:
  std::vector<std::string> columns_;
  std::ostringstream out_;
};

/// Ordered "key: value" lines.
class Report {
 public:
  void add(const std::string& key, const std::string& value) { lines_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, format_number(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }

  std::string str() const {
    std::string s;
    for (const auto& [k, v] : lines_) s += k + ": " + v + "\n";
    return s;
  }
  const std::vector<std::pair<std::string, std::string>>& lines() const { return lines_; }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

struct PlotSeries {
  std::string x_column;
  std::string y_column;
  std::string title;
  bool absolute = false;
};

/// gnuplot script that plots columns of `csv_name` (resolved next to the script).
inline std::string gnuplot_script(const std::string& csv_name, const std::vector<std::string>& columns,
                                  const std::vector<PlotSeries>& series, bool logx, bool logy,
                                  const std::string& title) {
  auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i + 1;
    throw InvalidArgument("gnuplot_script: unknown column '" + name + "'");
  };
  std::ostringstream os;
  os << "set datafile separator ','\n";
  os << "set key autotitle columnhead\n";
  os << "set title '" << title << "'\n";
  if (logx) os << "set logscale x\n";
  if (logy) os << "set logscale y\n";
  os << "plot ";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const std::string y = "$" + std::to_string(index_of(s.y_column));
    const std::string x = "$" + std::to_string(index_of(s.x_column));
    os << (i ? ", \\\n     " : "") << "'" << csv_name << "' using "
       << (logx ? "(abs(" + x + "))" : "(" + x + ")") << ":"
       << (s.absolute ? "(abs(" + y + "))" : "(" + y + ")") << " with linespoints title '"
       << s.title << "'";
  }
  os << "\n";
  return os.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace gsblow::io
