#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "gsblow/error.hpp"

namespace gsblow {

struct LineFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidArgument("least_squares: need at least two (x, y) pairs");
  const double m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("least_squares: abscissae are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

/// Power-law fit value ~ prefactor * scale^exponent on strictly positive data.
struct PowerFit {
  double exponent = std::numeric_limits<double>::quiet_NaN();
  double prefactor = std::numeric_limits<double>::quiet_NaN();
};

inline PowerFit loglog_fit(std::span<const double> scale, std::span<const double> value) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < scale.size(); ++i) {
    if (!(scale[i] > 0.0) || !(value[i] > 0.0) || !std::isfinite(value[i])) continue;
    lx.push_back(std::log(scale[i]));
    ly.push_back(std::log(value[i]));
  }
  if (lx.size() < 2) return {};
  const LineFit f = least_squares(lx, ly);
  return {f.slope, std::exp(f.intercept)};
}

}  // namespace gsblow
