#pragma once

#include <cmath>
#include <span>

#include "lowmode/errors.hpp"

namespace lowmode {

/// Least-squares slope of log(y) against log(x).
inline double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size() && x.size() >= 2, ErrorCategory::invalid_argument,
                  "slope fit needs at least two matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    detail::require(x[i] > 0.0 && y[i] > 0.0, ErrorCategory::invalid_argument, "slope fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Convergence order between two grids with spacings h_coarse > h_fine.
inline double observed_order(double err_coarse, double err_fine, double h_coarse, double h_fine) {
  return std::log(err_coarse / err_fine) / std::log(h_coarse / h_fine);
}

}  // namespace lowmode
