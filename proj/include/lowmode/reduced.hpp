#pragma once

// Galerkin projection of the finite-difference system onto the sampled eigenmodes:
// A_LL = BᵀAB, f_M = BᵀF, dense Cholesky, lift-back u_RD = Bz.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "lowmode/errors.hpp"
#include "lowmode/grid.hpp"
#include "lowmode/sparse.hpp"
#include "lowmode/spectral.hpp"
#include "lowmode/timing.hpp"

namespace lowmode {

/// Largest reduced dimension handled with dense storage (M <= 32).
inline constexpr Eigen::Index max_dense_reduced_dimension = 1024;

struct ReducedSystem {
  Matrix a_ll;
  Vector f_m;
  std::string basis_label;
  double assembly_time_s = 0.0;
  double solve_time_s = 0.0;
};

/// A_LL = Bᵀ(A·B), symmetrized; f_M = BᵀF. Cost O(N·K) for A·B and O(N·K²) for the product.
inline ReducedSystem project_system(const SparseOperator& a, const Vector& f, const SpectralBasis& basis) {
  const Matrix& b = basis.matrix();
  detail::require(a.rows() == b.rows() && f.size() == b.rows(), ErrorCategory::invalid_argument,
                  "project_system: operator, load and basis disagree on N");
  detail::require(b.cols() <= max_dense_reduced_dimension, ErrorCategory::feasibility,
                  "reduced dimension K=" + std::to_string(b.cols()) + " exceeds the dense limit");
  Stopwatch sw;
  ReducedSystem rs;
  // Accumulated over row blocks so each slice of A·B is consumed while still in cache.
  constexpr Eigen::Index block = 512;
  const Eigen::Index n = b.rows();
  rs.a_ll = Matrix::Zero(b.cols(), b.cols());
  Matrix w(std::min(block, n), b.cols());
  for (Eigen::Index r0 = 0; r0 < n; r0 += block) {
    const Eigen::Index nr = std::min(block, n - r0);
    a.multiply_rows(b, r0, nr, w);
    rs.a_ll.noalias() += b.middleRows(r0, nr).transpose() * w.topRows(nr);
  }
  rs.a_ll = 0.5 * (rs.a_ll + rs.a_ll.transpose()).eval();
  rs.f_m.noalias() = b.transpose() * f;
  rs.basis_label = basis.label() + "/M=" + std::to_string(basis.cutoff()) + "/" +
                   std::string(to_string(basis.normalization()));
  rs.assembly_time_s = sw.seconds();
  return rs;
}

/// Same reduced system for the sampled-mode basis, with B generated a few grid lines at a time
/// from the 1-D sine table instead of being stored whole. Each block of A·B is consumed while it
/// is still in cache. Needs A to couple only neighbouring grid lines (bandwidth <= m).
inline ReducedSystem project_system(const SparseOperator& a, const Vector& f, const TensorSineBasis& basis) {
  const Grid2D& grid = basis.grid();
  const int m = grid.m();
  const Eigen::Index k = static_cast<Eigen::Index>(basis.cutoff()) * basis.cutoff();
  detail::require(a.rows() == grid.size() && f.size() == grid.size(), ErrorCategory::invalid_argument,
                  "project_system: operator, load and basis disagree on N");
  detail::require(k <= max_dense_reduced_dimension, ErrorCategory::feasibility,
                  "reduced dimension K=" + std::to_string(k) + " exceeds the dense limit");
  detail::require(a.bandwidth() <= m, ErrorCategory::invalid_argument,
                  "streamed projection needs an operator coupling neighbouring grid lines only");
  Stopwatch sw;
  ReducedSystem rs;
  const int lines = std::max(1, 512 / m);
  Matrix window(static_cast<Eigen::Index>(lines + 2) * m, k), w(static_cast<Eigen::Index>(lines) * m, k);
  rs.a_ll = Matrix::Zero(k, k);
  rs.f_m = Vector::Zero(k);
  for (int j0 = 0; j0 < m; j0 += lines) {
    const int j1 = std::min(m, j0 + lines);
    const int w0 = std::max(0, j0 - 1), w1 = std::min(m, j1 + 1);
    basis.lines(w0, w1, window);
    const Eigen::Index first = static_cast<Eigen::Index>(j0) * m, rows = static_cast<Eigen::Index>(j1 - j0) * m;
    const auto x = window.topRows(static_cast<Eigen::Index>(w1 - w0) * m);
    a.multiply_rows(x, first, rows, w, static_cast<Eigen::Index>(w0) * m);
    const auto b = window.middleRows(static_cast<Eigen::Index>(j0 - w0) * m, rows);
    rs.a_ll.noalias() += b.transpose() * w.topRows(rows);
    rs.f_m.noalias() += b.transpose() * f.segment(first, rows);
  }
  rs.a_ll = 0.5 * (rs.a_ll + rs.a_ll.transpose()).eval();
  rs.basis_label = "interp/M=" + std::to_string(basis.cutoff()) + "/streamed";
  rs.assembly_time_s = sw.seconds();
  return rs;
}

/// Dense Cholesky solve of A_LL z = f_M.
inline Vector solve_reduced(ReducedSystem& rs) {
  detail::require(rs.a_ll.rows() == rs.a_ll.cols() && rs.a_ll.rows() == rs.f_m.size(),
                  ErrorCategory::invalid_argument, "solve_reduced: inconsistent reduced system");
  Stopwatch sw;
  Eigen::LLT<Matrix> llt(rs.a_ll);
  if (llt.info() != Eigen::Success)
    detail::fail(ErrorCategory::definiteness_failure, "reduced operator is not positive definite (" + rs.basis_label + ")");
  Vector z = llt.solve(rs.f_m);
  rs.solve_time_s = sw.seconds();
  return z;
}

inline Vector solve_reduced(const ReducedSystem& rs) {
  ReducedSystem copy = rs;
  return solve_reduced(copy);
}

inline GridFunction lift(const SpectralBasis& basis, const Vector& z) {
  detail::require(z.size() == basis.dimension(), ErrorCategory::invalid_argument,
                  "lift: expected " + std::to_string(basis.dimension()) + " coefficients, got " + std::to_string(z.size()));
  return GridFunction(basis.grid(), basis.matrix() * z);
}

/// sqrt(vᵀAv).
inline double energy_norm(const SparseOperator& a, const Vector& v) {
  detail::require(a.cols() == v.size(), ErrorCategory::invalid_argument, "energy_norm: size mismatch");
  const double e = v.dot(apply_operator(a, v));
  if (e < 0.0) {
    if (e < -1e-14 * v.squaredNorm())
      detail::fail(ErrorCategory::definiteness_failure, "negative energy vᵀAv = " + std::to_string(e));
    return 0.0;
  }
  return std::sqrt(e);
}

/// λ_max/λ_min from a full symmetric eigendecomposition.
inline double condition_number(const Matrix& a_ll) {
  detail::require(a_ll.rows() == a_ll.cols() && a_ll.rows() > 0, ErrorCategory::invalid_argument,
                  "condition_number: matrix must be square and non-empty");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a_ll, Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  if (!(ev[0] > 0.0))
    detail::fail(ErrorCategory::definiteness_failure, "smallest eigenvalue " + std::to_string(ev[0]) + " is not positive");
  return ev[ev.size() - 1] / ev[0];
}

struct ReducedPhaseTimes {
  double basis_s = 0.0;
  double project_s = 0.0;
  double solve_s = 0.0;
  double lift_s = 0.0;
  double total(bool include_basis = true) const { return (include_basis ? basis_s : 0.0) + project_s + solve_s + lift_s; }
};

struct ReducedSolution {
  Vector z;
  GridFunction u;
  ReducedPhaseTimes times;
  int iterations = 0;  // nonzero only for the matrix-free route
};

/// Basis build, projection, dense solve and lift, timed per phase. The basis is the sampled
/// sine modes held in tensor form; projection streams B (see above) and the lift applies it
/// by two GEMMs, so no N×K array is kept.
inline ReducedSolution solve_reduced_pipeline(const SparseOperator& a, const Vector& f, const Grid2D& grid, int cutoff,
                                              Normalization norm = Normalization::mass_orthonormal) {
  ReducedSolution out;
  Stopwatch sw;
  const double scale = norm == Normalization::mass_orthonormal ? 2.0 / (grid.h() * (grid.m() + 1)) : 1.0;
  const TensorSineBasis basis(grid, cutoff, scale);
  out.times.basis_s = sw.seconds();
  sw.reset();
  ReducedSystem rs = project_system(a, f, basis);
  out.times.project_s = sw.seconds();
  sw.reset();
  out.z = solve_reduced(rs);
  out.times.solve_s = sw.seconds();
  sw.reset();
  out.u = GridFunction(grid, basis.apply(out.z));
  out.times.lift_s = sw.seconds();
  return out;
}

/// Same Galerkin problem solved without forming B or A_LL, for K beyond the dense limit:
/// B is applied by tensor-product sine transforms (scaled to Euclidean-orthonormal columns)
/// and BᵀAB z = BᵀF is solved by conjugate gradients preconditioned with the κ≡1 eigenvalues,
/// which are spectrally equivalent to A_LL within κ_max/κ_min.
inline ReducedSolution solve_reduced_matrix_free(const SparseOperator& a, const Vector& f, const Grid2D& grid,
                                                 int cutoff, double rel_tol = 1e-13, int max_iter = 2000) {
  detail::require(a.rows() == grid.size() && f.size() == grid.size(), ErrorCategory::invalid_argument,
                  "matrix-free reduced solve: size mismatch");
  Stopwatch total;
  const TensorSineBasis basis(grid, cutoff, 2.0 / (grid.m() + 1));
  const Eigen::Index k = static_cast<Eigen::Index>(cutoff) * cutoff;
  Vector inv_diag(k);
  for (int p = 1; p <= cutoff; ++p)
    for (int q = 1; q <= cutoff; ++q)
      inv_diag[static_cast<Eigen::Index>(p - 1) * cutoff + (q - 1)] = 1.0 / discrete_eigenvalue(grid, p, q);

  auto apply_reduced = [&](const Vector& z) { return basis.apply_transpose(apply_operator(a, basis.apply(z))); };

  const Vector rhs = basis.apply_transpose(f);
  const double rhs_norm = rhs.norm();
  ReducedSolution out;
  out.z = Vector::Zero(k);
  if (rhs_norm == 0.0) {
    out.u = GridFunction(grid);
    return out;
  }
  Vector r = rhs;
  Vector s = inv_diag.cwiseProduct(r);
  Vector d = s;
  double rs = r.dot(s);
  int it = 0;
  while (r.norm() > rel_tol * rhs_norm) {
    if (it == max_iter)
      detail::fail(ErrorCategory::convergence_failure,
                   "matrix-free reduced solve stalled at relative residual " + std::to_string(r.norm() / rhs_norm));
    const Vector ad = apply_reduced(d);
    const double alpha = rs / d.dot(ad);
    out.z += alpha * d;
    r -= alpha * ad;
    s = inv_diag.cwiseProduct(r);
    const double rs_new = r.dot(s);
    d = s + (rs_new / rs) * d;
    rs = rs_new;
    ++it;
  }
  out.iterations = it;
  out.u = GridFunction(grid, basis.apply(out.z));
  out.times.solve_s = total.seconds();
  return out;
}

}  // namespace lowmode
