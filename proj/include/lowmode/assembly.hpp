#pragma once

// Five-point finite-difference assembly of -div(kappa grad u) with zero Dirichlet data,
// and the manufactured test problems.

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lowmode/errors.hpp"
#include "lowmode/grid.hpp"
#include "lowmode/sparse.hpp"

namespace lowmode {

enum class Averaging { midpoint, harmonic };

inline std::string_view to_string(Averaging a) { return a == Averaging::midpoint ? "midpoint" : "harmonic"; }

inline Averaging parse_averaging(std::string_view s) {
  if (s == "midpoint") return Averaging::midpoint;
  if (s == "harmonic") return Averaging::harmonic;
  detail::fail(ErrorCategory::invalid_argument, "unknown averaging rule '" + std::string(s) + "'");
}

namespace detail {

inline void check_positive(double k, double x, double y) {
  if (!(k > 0.0) || !std::isfinite(k)) {
    std::ostringstream os;
    os << "coefficient sample " << k << " at (" << x << "," << y << ") is not strictly positive";
    fail(ErrorCategory::ellipticity_violation, os.str());
  }
}

// Edge coefficients on the (m+1)-by-m lattices of x- and y-edges. Each value is computed
// once and shared by the two rows it touches, which makes the operator bitwise symmetric.
struct EdgeCoefficients {
  std::vector<double> x_edges;  // (i+1/2, j): index j_0 * (m+1) + i, i in 0..m
  std::vector<double> y_edges;  // (i, j+1/2): index i_0 * (m+1) + j, j in 0..m
};

inline EdgeCoefficients edge_coefficients(const Grid2D& grid, const ScalarField& kappa, Averaging rule) {
  const int m = grid.m();
  const double h = grid.h();
  const std::size_t per = static_cast<std::size_t>(m + 1);
  EdgeCoefficients e;
  e.x_edges.resize(per * static_cast<std::size_t>(m));
  e.y_edges.resize(per * static_cast<std::size_t>(m));

  if (rule == Averaging::midpoint) {
    for (int j = 1; j <= m; ++j)
      for (int i = 0; i <= m; ++i) {
        const double x = (i + 0.5) * h, y = j * h;
        const double k = kappa(x, y);
        check_positive(k, x, y);
        e.x_edges[static_cast<std::size_t>(j - 1) * per + i] = k;
      }
    for (int i = 1; i <= m; ++i)
      for (int j = 0; j <= m; ++j) {
        const double x = i * h, y = (j + 0.5) * h;
        const double k = kappa(x, y);
        check_positive(k, x, y);
        e.y_edges[static_cast<std::size_t>(i - 1) * per + j] = k;
      }
    return e;
  }

  // Harmonic mean of nodal samples, boundary nodes included.
  const std::size_t side = static_cast<std::size_t>(m + 2);
  std::vector<double> nodal(side * side);
  for (int j = 0; j <= m + 1; ++j)
    for (int i = 0; i <= m + 1; ++i) {
      const double x = i * h, y = j * h;
      const double k = kappa(x, y);
      check_positive(k, x, y);
      nodal[static_cast<std::size_t>(j) * side + i] = k;
    }
  auto at = [&](int i, int j) { return nodal[static_cast<std::size_t>(j) * side + i]; };
  auto hmean = [](double a, double b) { return 2.0 * a * b / (a + b); };
  for (int j = 1; j <= m; ++j)
    for (int i = 0; i <= m; ++i) e.x_edges[static_cast<std::size_t>(j - 1) * per + i] = hmean(at(i, j), at(i + 1, j));
  for (int i = 1; i <= m; ++i)
    for (int j = 0; j <= m; ++j) e.y_edges[static_cast<std::size_t>(i - 1) * per + j] = hmean(at(i, j), at(i, j + 1));
  return e;
}

}  // namespace detail

/// Row (i,j): h⁻²[κ_{i+½,j}(u_ij − u_{i+1,j}) + κ_{i−½,j}(u_ij − u_{i−1,j}) + ... ] with
/// boundary neighbours dropped. Columns are sorted within each row.
inline SparseOperator assemble_operator(const Grid2D& grid, const ScalarField& kappa,
                                        Averaging rule = Averaging::midpoint) {
  const int m = grid.m();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  const auto edges = detail::edge_coefficients(grid, kappa, rule);
  const std::size_t per = static_cast<std::size_t>(m + 1);
  auto kx = [&](int i, int j) { return edges.x_edges[static_cast<std::size_t>(j - 1) * per + i] * inv_h2; };
  auto ky = [&](int i, int j) { return edges.y_edges[static_cast<std::size_t>(i - 1) * per + j] * inv_h2; };

  const std::ptrdiff_t n = grid.size();
  std::vector<std::ptrdiff_t> offsets;
  std::vector<std::ptrdiff_t> cols;
  std::vector<double> vals;
  offsets.reserve(static_cast<std::size_t>(n) + 1);
  cols.reserve(static_cast<std::size_t>(5 * n));
  vals.reserve(static_cast<std::size_t>(5 * n));
  offsets.push_back(0);

  for (int j = 1; j <= m; ++j) {
    for (int i = 1; i <= m; ++i) {
      const std::ptrdiff_t row = static_cast<std::ptrdiff_t>(j - 1) * m + (i - 1);
      const double west = kx(i - 1, j), east = kx(i, j);
      const double south = ky(i, j - 1), north = ky(i, j);
      if (j > 1) { cols.push_back(row - m); vals.push_back(-south); }
      if (i > 1) { cols.push_back(row - 1); vals.push_back(-west); }
      cols.push_back(row);
      vals.push_back((east + west) + (north + south));
      if (i < m) { cols.push_back(row + 1); vals.push_back(-east); }
      if (j < m) { cols.push_back(row + m); vals.push_back(-north); }
      offsets.push_back(static_cast<std::ptrdiff_t>(cols.size()));
    }
  }
  return SparseOperator(n, n, std::move(offsets), std::move(cols), std::move(vals));
}

/// Collocation load: F_k = f(x_k).
inline GridFunction assemble_rhs(const Grid2D& grid, const ScalarField& f) { return sample_field(grid, f); }

struct Problem {
  std::string name;
  ScalarField kappa;
  ScalarField f;
  std::optional<ScalarField> u_exact;
  double kappa_min = 1.0;
  double kappa_max = 1.0;
};

namespace detail {

// u = sin(πx) sin(πy) with κ = 1 + a sin(wπx) sin(wπy); forcing from the product rule.
inline Problem sine_problem(std::string name, double amplitude, double freq) {
  using std::numbers::pi;
  const double a = amplitude, w = freq;
  Problem p;
  p.name = std::move(name);
  p.kappa = [a, w](double x, double y) { return 1.0 + a * std::sin(w * pi * x) * std::sin(w * pi * y); };
  p.f = [a, w](double x, double y) {
    const double sx = std::sin(pi * x), sy = std::sin(pi * y);
    const double cx = std::cos(pi * x), cy = std::cos(pi * y);
    const double kap = 1.0 + a * std::sin(w * pi * x) * std::sin(w * pi * y);
    const double dkx = a * w * pi * std::cos(w * pi * x) * std::sin(w * pi * y);
    const double dky = a * w * pi * std::sin(w * pi * x) * std::cos(w * pi * y);
    return 2.0 * pi * pi * kap * sx * sy - dkx * pi * cx * sy - dky * pi * sx * cy;
  };
  p.u_exact = [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
  p.kappa_min = 1.0 - std::abs(a);
  p.kappa_max = 1.0 + std::abs(a);
  return p;
}

}  // namespace detail

/// example1: κ = 1 + ½ sin(2πx)sin(2πy); example2: κ = 1 + 0.9 sin(8πx)sin(8πy);
/// poisson: κ ≡ 1. All share u = sin(πx)sin(πy).
inline Problem manufactured_problem(std::string_view name) {
  if (name == "example1") return detail::sine_problem("example1", 0.5, 2.0);
  if (name == "example2") return detail::sine_problem("example2", 0.9, 8.0);
  if (name == "poisson") return detail::sine_problem("poisson", 0.0, 1.0);
  detail::fail(ErrorCategory::invalid_argument, "unknown problem '" + std::string(name) + "'");
}

}  // namespace lowmode
