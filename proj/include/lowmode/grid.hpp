#pragma once

// Uniform interior grid on the unit square, grid functions and discrete norms.

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <utility>

#include <Eigen/Core>

#include "lowmode/errors.hpp"

namespace lowmode {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A scalar function on the closed unit square.
using ScalarField = std::function<double(double, double)>;

/// m interior points per axis, spacing h = 1/(m+1), N = m² unknowns.
class Grid2D {
 public:
  Grid2D() = default;

  static Grid2D make(int m) {
    detail::require(m >= 1, ErrorCategory::invalid_argument,
                    "grid needs at least one interior point per axis, got m=" + std::to_string(m));
    Grid2D g;
    g.m_ = m;
    g.h_ = 1.0 / static_cast<double>(m + 1);
    return g;
  }

  int m() const noexcept { return m_; }
  double h() const noexcept { return h_; }
  std::ptrdiff_t size() const noexcept { return static_cast<std::ptrdiff_t>(m_) * m_; }

  /// Coordinate of interior node i (1-based).
  double coord(int i) const noexcept { return i * h_; }

  /// Lexicographic index, i fastest: (j-1)*m + (i-1).
  std::ptrdiff_t index(int i, int j) const {
    if (i < 1 || i > m_ || j < 1 || j > m_) {
      std::ostringstream os;
      os << "node (" << i << "," << j << ") outside 1.." << m_;
      detail::fail(ErrorCategory::invalid_argument, os.str());
    }
    return static_cast<std::ptrdiff_t>(j - 1) * m_ + (i - 1);
  }

  /// Inverse of index(): returns (i, j).
  std::pair<int, int> node(std::ptrdiff_t k) const {
    detail::require(k >= 0 && k < size(), ErrorCategory::invalid_argument,
                    "linear index " + std::to_string(k) + " out of range");
    return {static_cast<int>(k % m_) + 1, static_cast<int>(k / m_) + 1};
  }

  friend bool operator==(const Grid2D& a, const Grid2D& b) { return a.m_ == b.m_; }

 private:
  int m_ = 0;
  double h_ = 0.0;
};

inline Grid2D make_grid(int m) { return Grid2D::make(m); }

inline std::ptrdiff_t node_index(int i, int j, const Grid2D& grid) { return grid.index(i, j); }

/// Nodal values on the interior; boundary values are implicitly zero.
struct GridFunction {
  Grid2D grid;
  Vector values;

  GridFunction() = default;
  explicit GridFunction(const Grid2D& g) : grid(g), values(Vector::Zero(g.size())) {}
  GridFunction(const Grid2D& g, Vector v) : grid(g), values(std::move(v)) {
    detail::require(values.size() == grid.size(), ErrorCategory::invalid_argument,
                    "grid function length " + std::to_string(values.size()) +
                        " does not match N=" + std::to_string(grid.size()));
  }

  double operator()(int i, int j) const { return values[grid.index(i, j)]; }
};

inline GridFunction sample_field(const Grid2D& grid, const ScalarField& field) {
  GridFunction out(grid);
  const int m = grid.m();
  for (int j = 1; j <= m; ++j) {
    for (int i = 1; i <= m; ++i) {
      const double x = grid.coord(i), y = grid.coord(j);
      const double v = field(x, y);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite field value at node (" << i << "," << j << ") = (" << x << "," << y << ")";
        detail::fail(ErrorCategory::evaluation, os.str());
      }
      out.values[static_cast<std::ptrdiff_t>(j - 1) * m + (i - 1)] = v;
    }
  }
  return out;
}

namespace detail {

// Sequential pairwise summation of term(0..n-1); fixed order, so results are reproducible.
template <class Term>
double pairwise_sum(std::ptrdiff_t begin, std::ptrdiff_t end, const Term& term) {
  constexpr std::ptrdiff_t block = 64;
  if (end - begin <= block) {
    double s = 0.0;
    for (std::ptrdiff_t k = begin; k < end; ++k) s += term(k);
    return s;
  }
  const std::ptrdiff_t mid = begin + (end - begin) / 2;
  return pairwise_sum(begin, mid, term) + pairwise_sum(mid, end, term);
}

}  // namespace detail

/// sqrt(h² Σ v_k²), the quadrature analogue of the continuum L² norm.
inline double discrete_l2_norm(const Grid2D& grid, const Vector& v) {
  detail::require(v.size() == grid.size(), ErrorCategory::invalid_argument, "l2 norm: size mismatch");
  const double s = detail::pairwise_sum(0, v.size(), [&](std::ptrdiff_t k) { return v[k] * v[k]; });
  return grid.h() * std::sqrt(s);
}

inline double discrete_l2_norm(const GridFunction& v) { return discrete_l2_norm(v.grid, v.values); }

/// Forward-difference H¹ seminorm with zero ghost values on the boundary.
/// Every edge of the (m+1)×(m+1) cell lattice contributes (Δv/h)²·h² = Δv².
inline double discrete_h1_seminorm(const Grid2D& grid, const Vector& v) {
  detail::require(v.size() == grid.size(), ErrorCategory::invalid_argument, "h1 seminorm: size mismatch");
  const int m = grid.m();
  auto at = [&](int i, int j) -> double {
    if (i < 1 || i > m || j < 1 || j > m) return 0.0;
    return v[static_cast<std::ptrdiff_t>(j - 1) * m + (i - 1)];
  };
  // Edges indexed row by row: for row j in 0..m, the x-edges (i, i+1), i in 0..m,
  // and for j in 0..m, i in 1..m the y-edges (j, j+1).
  const std::ptrdiff_t per_row = static_cast<std::ptrdiff_t>(m + 1);
  const std::ptrdiff_t x_edges = static_cast<std::ptrdiff_t>(m) * per_row;
  const std::ptrdiff_t y_edges = static_cast<std::ptrdiff_t>(m) * per_row;
  const double sx = detail::pairwise_sum(0, x_edges, [&](std::ptrdiff_t e) {
    const int j = static_cast<int>(e / per_row) + 1;
    const int i = static_cast<int>(e % per_row);
    const double d = at(i + 1, j) - at(i, j);
    return d * d;
  });
  const double sy = detail::pairwise_sum(0, y_edges, [&](std::ptrdiff_t e) {
    const int i = static_cast<int>(e / per_row) + 1;
    const int j = static_cast<int>(e % per_row);
    const double d = at(i, j + 1) - at(i, j);
    return d * d;
  });
  return std::sqrt(sx + sy);
}

inline double discrete_h1_seminorm(const GridFunction& v) { return discrete_h1_seminorm(v.grid, v.values); }

}  // namespace lowmode
