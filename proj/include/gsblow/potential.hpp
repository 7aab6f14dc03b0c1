#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "gsblow/error.hpp"
#include "gsblow/grid.hpp"

namespace gsblow {

/// shift + scale * r^alpha
struct PowerLaw {
  double alpha = 2.0;
  double scale = 1.0;
  double shift = 0.0;
};

/// c0 + c1 r + c2 r^2 + ...
struct Polynomial {
  std::vector<double> coefficients;
};

/// scale * exp(rate * r)
struct Exponential {
  double rate = 1.0;
  double scale = 1.0;
};

/// Piecewise-linear profile through (r, value) samples. Constant below the
/// first sample, power-law continuation of the last two samples beyond the end.
struct Tabulated {
  std::vector<double> r;
  std::vector<double> value;
};

class PotentialSpec;

/// base(|x|) * (1 + amplitude * sin(frequency * x_1)); not radial.
struct Perturbed {
  std::shared_ptr<const PotentialSpec> base;
  double amplitude = 0.0;
  double frequency = 1.0;
};

/// A potential q(x) = factor * kind(x) + offset + inverse_square / |x|^2.
///
/// The inverse-square term is how the radial reduction's centrifugal
/// correction is carried; user-facing specs leave it at zero.
class PotentialSpec {
 public:
  using Kind = std::variant<PowerLaw, Polynomial, Exponential, Tabulated, Perturbed>;

  explicit PotentialSpec(Kind kind) : kind_(std::move(kind)) { validate(); }

  static PotentialSpec power(double alpha, double scale = 1.0, double shift = 0.0) {
    return PotentialSpec(PowerLaw{alpha, scale, shift});
  }
  static PotentialSpec polynomial(std::vector<double> coefficients) {
    return PotentialSpec(Polynomial{std::move(coefficients)});
  }
  static PotentialSpec exponential(double rate, double scale = 1.0) {
    return PotentialSpec(Exponential{rate, scale});
  }
  static PotentialSpec tabulated(std::vector<double> r, std::vector<double> value) {
    return PotentialSpec(Tabulated{std::move(r), std::move(value)});
  }
  static PotentialSpec perturbed(const PotentialSpec& base, double amplitude,
                                 double frequency = 1.0) {
    return PotentialSpec(
        Perturbed{std::make_shared<const PotentialSpec>(base), amplitude, frequency});
  }
  static PotentialSpec zero() { return polynomial({0.0}); }

  const Kind& kind() const { return kind_; }
  double factor() const { return factor_; }
  double offset() const { return offset_; }
  double inverse_square() const { return inverse_square_; }

  bool is_radial() const { return !std::holds_alternative<Perturbed>(kind_); }

  PotentialSpec scaled(double s) const {
    PotentialSpec out = *this;
    out.factor_ *= s;
    out.offset_ *= s;
    out.inverse_square_ *= s;
    return out;
  }
  PotentialSpec shifted(double s) const {
    PotentialSpec out = *this;
    out.offset_ += s;
    return out;
  }
  PotentialSpec with_inverse_square(double coefficient) const {
    PotentialSpec out = *this;
    out.inverse_square_ = coefficient;
    return out;
  }

  /// Radial profile Q(r). Throws for non-radial potentials.
  double radial(double r) const {
    if (!is_radial()) throw InvalidArgument("potential: " + describe() + " is not radial");
    return finish(base_radial(r), r);
  }

  /// q at a point given by its coordinates (1 or 2 entries).
  double at(double x1, double x2 = 0.0) const {
    const double r = std::hypot(x1, x2);
    if (const auto* p = std::get_if<Perturbed>(&kind_))
      return finish(p->base->radial(r) * (1.0 + p->amplitude * std::sin(p->frequency * x1)), r);
    return finish(base_radial(r), r);
  }

  /// q at node k of a grid.
  double at_node(const Grid& grid, std::size_t k) const {
    if (grid.geometry().is_radial()) return radial(grid.coordinate(k, 0));
    if (grid.geometry().dim == 1) return at(grid.coordinate(k, 0));
    return at(grid.coordinate(k, 0), grid.coordinate(k, 1));
  }

  Vector on_grid(const Grid& grid) const {
    Vector v(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) v[static_cast<Eigen::Index>(k)] = at_node(grid, k);
    return v;
  }

  std::string describe() const {
    std::ostringstream os;
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, PowerLaw>) {
            os << "power(alpha=" << k.alpha << ", scale=" << k.scale;
            if (k.shift != 0.0) os << ", shift=" << k.shift;
            os << ")";
          } else if constexpr (std::is_same_v<K, Polynomial>) {
            os << "polynomial(";
            for (std::size_t i = 0; i < k.coefficients.size(); ++i)
              os << (i ? ", " : "") << k.coefficients[i];
            os << ")";
          } else if constexpr (std::is_same_v<K, Exponential>) {
            os << "exponential(rate=" << k.rate << ", scale=" << k.scale << ")";
          } else if constexpr (std::is_same_v<K, Tabulated>) {
            os << "tabulated(" << k.r.size() << " samples)";
          } else {
            os << "perturbed(" << k.base->describe() << ", amplitude=" << k.amplitude
               << ", frequency=" << k.frequency << ")";
          }
        },
        kind_);
    if (factor_ != 1.0) os << "*" << factor_;
    if (offset_ != 0.0) os << "+" << offset_;
    if (inverse_square_ != 0.0) os << (inverse_square_ > 0 ? "+" : "") << inverse_square_ << "/r^2";
    return os.str();
  }

 private:
  double finish(double value, double r) const {
    double q = factor_ * value + offset_;
    if (inverse_square_ != 0.0) q += inverse_square_ / (r * r);
    return q;
  }

  double base_radial(double r) const {
    return std::visit(
        [r](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, PowerLaw>) {
            return k.shift + k.scale * std::pow(r, k.alpha);
          } else if constexpr (std::is_same_v<K, Polynomial>) {
            double acc = 0.0;
            for (auto it = k.coefficients.rbegin(); it != k.coefficients.rend(); ++it)
              acc = acc * r + *it;
            return acc;
          } else if constexpr (std::is_same_v<K, Exponential>) {
            return k.scale * std::exp(k.rate * r);
          } else if constexpr (std::is_same_v<K, Tabulated>) {
            return interpolate(k, r);
          } else {
            throw InvalidArgument("potential: perturbed potential has no radial profile");
          }
        },
        kind_);
  }

  static double interpolate(const Tabulated& t, double r) {
    const auto& xs = t.r;
    const auto& ys = t.value;
    if (r <= xs.front()) return ys.front();
    const std::size_t m = xs.size();
    if (r >= xs.back()) {
      const double x0 = xs[m - 2], x1 = xs[m - 1], y0 = ys[m - 2], y1 = ys[m - 1];
      if (x0 > 0.0 && y0 > 0.0 && y1 > 0.0) {
        const double p = std::log(y1 / y0) / std::log(x1 / x0);
        return y1 * std::pow(r / x1, p);
      }
      return y1 + (y1 - y0) / (x1 - x0) * (r - x1);
    }
    const auto it = std::upper_bound(xs.begin(), xs.end(), r);
    const std::size_t j = static_cast<std::size_t>(it - xs.begin());
    const double t01 = (r - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return ys[j - 1] + t01 * (ys[j] - ys[j - 1]);
  }

  void validate() const {
    if (const auto* t = std::get_if<Tabulated>(&kind_)) {
      if (t->r.size() < 2 || t->r.size() != t->value.size())
        throw InvalidArgument("potential: tabulated profile needs >= 2 (r, value) pairs");
      for (std::size_t i = 1; i < t->r.size(); ++i)
        if (!(t->r[i] > t->r[i - 1]))
          throw InvalidArgument("potential: tabulated radii must be strictly increasing");
    }
    if (const auto* p = std::get_if<Perturbed>(&kind_)) {
      if (!p->base || !p->base->is_radial())
        throw InvalidArgument("potential: perturbation base must be radial");
    }
    if (const auto* p = std::get_if<Polynomial>(&kind_)) {
      if (p->coefficients.empty()) throw InvalidArgument("potential: empty polynomial");
    }
  }

  Kind kind_;
  double factor_ = 1.0;
  double offset_ = 0.0;
  double inverse_square_ = 0.0;
};

/// Reads a two-column CSV (r, value). A non-numeric first line is treated as a header.
inline std::pair<std::vector<double>, std::vector<double>> read_two_column_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open table '" + path + "'");
  std::vector<double> xs, ys;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x = 0.0, y = 0.0;
    if (!(ls >> x >> y)) {
      if (xs.empty() && lineno == 1) continue;
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected two numbers");
    }
    xs.push_back(x);
    ys.push_back(y);
  }
  return {std::move(xs), std::move(ys)};
}

inline PotentialSpec load_tabulated(const std::string& path) {
  auto [r, q] = read_two_column_csv(path);
  return PotentialSpec::tabulated(std::move(r), std::move(q));
}

}  // namespace gsblow
