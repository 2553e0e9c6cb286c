#pragma once

// Brute-force check of the low/high splitting on small grids. The operator is rotated into
// the full mass-orthonormal sine basis Q, giving the Galerkin matrix Ã = h²·QᵀAQ of the
// discrete form a_h(v,w) = h²·vᵀAw, which is then split into low (p,q <= M) and high blocks.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "lowmode/errors.hpp"
#include "lowmode/fit.hpp"
#include "lowmode/sparse.hpp"
#include "lowmode/spectral.hpp"

namespace lowmode {

inline constexpr int max_oracle_grid = 63;

struct IndexPartition {
  std::vector<Eigen::Index> low;   // full-basis columns with p,q <= M, ordered as the reduced basis
  std::vector<Eigen::Index> high;  // remaining columns, ascending
};

inline IndexPartition partition_modes(const Grid2D& grid, int cutoff) {
  const int m = grid.m();
  detail::require(cutoff >= 1 && cutoff <= m, ErrorCategory::invalid_argument, "partition cutoff out of range");
  IndexPartition part;
  std::vector<char> is_low(static_cast<std::size_t>(grid.size()), 0);
  for (int p = 1; p <= cutoff; ++p)
    for (int q = 1; q <= cutoff; ++q) {
      const Eigen::Index k = dst2_slot(grid, p, q);
      part.low.push_back(k);
      is_low[static_cast<std::size_t>(k)] = 1;
    }
  for (Eigen::Index k = 0; k < grid.size(); ++k)
    if (!is_low[static_cast<std::size_t>(k)]) part.high.push_back(k);
  return part;
}

struct OperatorBlocks {
  Matrix ll, lh, hh;
};

class BlockedOperator {
 public:
  BlockedOperator(const Grid2D& grid, Matrix a_tilde) : grid_(grid), a_(std::move(a_tilde)) {}

  const Grid2D& grid() const noexcept { return grid_; }
  const Matrix& matrix() const noexcept { return a_; }

  OperatorBlocks blocks(int cutoff) const {
    const IndexPartition part = partition_modes(grid_, cutoff);
    OperatorBlocks b;
    b.ll = a_(part.low, part.low);
    b.lh = a_(part.low, part.high);
    b.hh = a_(part.high, part.high);
    return b;
  }

  /// max |Ã − Ãᵀ| / max |Ã|.
  double relative_asymmetry() const { return (a_ - a_.transpose()).cwiseAbs().maxCoeff() / a_.cwiseAbs().maxCoeff(); }

 private:
  Grid2D grid_;
  Matrix a_;
};

namespace detail {

inline void check_oracle_grid(const Grid2D& grid) {
  if (grid.m() > max_oracle_grid)
    fail(ErrorCategory::feasibility, "dense oracle limited to m <= " + std::to_string(max_oracle_grid) +
                                         ", got m=" + std::to_string(grid.m()));
}

// Spectral norm of a symmetric matrix.
inline double symmetric_norm2(const Matrix& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
  return std::max(std::abs(eig.eigenvalues()[0]), std::abs(eig.eigenvalues()[eig.eigenvalues().size() - 1]));
}

}  // namespace detail

/// Ã = h²·QᵀAQ, with Qᵀ applied column by column through the tensor sine transform.
inline BlockedOperator transform_full(const SparseOperator& a, const Grid2D& grid) {
  detail::check_oracle_grid(grid);
  detail::require(a.rows() == grid.size(), ErrorCategory::invalid_argument, "transform_full: size mismatch");
  const double scale = 2.0 / (grid.h() * (grid.m() + 1));
  const Matrix q = build_basis(grid, grid.m(), Normalization::mass_orthonormal).matrix();
  const Matrix aq = a.multiply(q);
  const TensorSineBasis qt(grid, grid.m(), scale);
  const double h2 = grid.h() * grid.h();
  Matrix at(grid.size(), grid.size());
  for (Eigen::Index c = 0; c < aq.cols(); ++c) at.col(c) = h2 * qt.apply_transpose(aq.col(c));
  return BlockedOperator(grid, std::move(at));
}

/// Second route: blocks formed directly from low and high sub-bases with dense products,
/// without the full transform.
inline OperatorBlocks blocks_direct(const SparseOperator& a, const Grid2D& grid, int cutoff) {
  detail::check_oracle_grid(grid);
  const Matrix q = build_basis(grid, grid.m(), Normalization::mass_orthonormal).matrix();
  const IndexPartition part = partition_modes(grid, cutoff);
  const Matrix ql = build_basis(grid, cutoff, Normalization::mass_orthonormal).matrix();
  const Matrix qh = q(Eigen::all, part.high);
  const double h2 = grid.h() * grid.h();
  const Matrix aql = a.multiply(ql);
  const Matrix aqh = a.multiply(qh);
  OperatorBlocks b;
  b.ll = h2 * (ql.transpose() * aql);
  b.lh = h2 * (ql.transpose() * aqh);
  b.hh = h2 * (qh.transpose() * aqh);
  return b;
}

/// ‖A_LH‖₂.
inline double coupling_norm(const BlockedOperator& op, int cutoff) {
  detail::require(cutoff < op.grid().m(), ErrorCategory::invalid_argument, "coupling_norm needs M < m");
  const OperatorBlocks b = op.blocks(cutoff);
  const Matrix g = b.lh * b.lh.transpose();
  return std::sqrt(std::max(0.0, detail::symmetric_norm2(g)));
}

struct SchurResult {
  Matrix s;
  double gap = 0.0;      // ‖S − A_LL‖₂
  double alpha_h = 0.0;  // λ_min(A_HH)
};

/// S = A_LL − A_LH A_HH⁻¹ A_HL by dense Cholesky of A_HH.
inline SchurResult exact_schur(const BlockedOperator& op, int cutoff) {
  detail::require(cutoff < op.grid().m(), ErrorCategory::invalid_argument, "exact_schur needs M < m");
  OperatorBlocks b = op.blocks(cutoff);
  b.hh = 0.5 * (b.hh + b.hh.transpose()).eval();
  const Eigen::LLT<Matrix> hh(b.hh);
  if (hh.info() != Eigen::Success)
    detail::fail(ErrorCategory::definiteness_failure, "high block A_HH is not positive definite");
  SchurResult r;
  const Matrix correction = b.lh * hh.solve(b.lh.transpose());
  r.s = b.ll - correction;
  r.gap = detail::symmetric_norm2(0.5 * (correction + correction.transpose()));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(b.hh, Eigen::EigenvaluesOnly);
  r.alpha_h = eig.eigenvalues()[0];
  if (!(r.alpha_h > 0.0))
    detail::fail(ErrorCategory::definiteness_failure, "λ_min(A_HH) = " + std::to_string(r.alpha_h));
  return r;
}

struct SchurSolutionComparison {
  Vector low_full;     // low coefficients of the full solve
  Vector low_schur;    // S⁻¹(F̃_L − A_LH A_HH⁻¹ F̃_H)
  Vector low_reduced;  // A_LL⁻¹ F̃_L
  double diff_energy = 0.0;           // ‖low_schur − low_reduced‖ in the A_LL energy
  double condensation_error = 0.0;    // ‖low_schur − low_full‖∞ / ‖low_full‖∞
};

/// Solves the low block with the exact Schur complement and with its truncation A_LL.
/// The load is rotated consistently: F̃ = h²·QᵀF.
inline SchurSolutionComparison reduced_vs_schur_solution(const BlockedOperator& op, const Vector& f, int cutoff) {
  const Grid2D& grid = op.grid();
  detail::require(f.size() == grid.size(), ErrorCategory::invalid_argument, "load size mismatch");
  const double h2 = grid.h() * grid.h();
  const Vector ft = h2 * TensorSineBasis(grid, grid.m(), 2.0 / (grid.h() * (grid.m() + 1))).apply_transpose(f);
  const IndexPartition part = partition_modes(grid, cutoff);
  const Vector fl = ft(part.low), fh = ft(part.high);

  Matrix full = op.matrix();
  full = 0.5 * (full + full.transpose()).eval();
  const Eigen::LLT<Matrix> full_llt(full);
  if (full_llt.info() != Eigen::Success) detail::fail(ErrorCategory::definiteness_failure, "Ã is not positive definite");
  const Vector u_full = full_llt.solve(ft);

  OperatorBlocks b = op.blocks(cutoff);
  b.hh = 0.5 * (b.hh + b.hh.transpose()).eval();
  b.ll = 0.5 * (b.ll + b.ll.transpose()).eval();
  const Eigen::LLT<Matrix> hh(b.hh);
  const Matrix s = b.ll - b.lh * hh.solve(b.lh.transpose());
  const Eigen::LLT<Matrix> s_llt(0.5 * (s + s.transpose()));
  const Eigen::LLT<Matrix> ll(b.ll);
  if (hh.info() != Eigen::Success || s_llt.info() != Eigen::Success || ll.info() != Eigen::Success)
    detail::fail(ErrorCategory::definiteness_failure, "block factorization failed");

  SchurSolutionComparison out;
  out.low_full = u_full(part.low);
  out.low_schur = s_llt.solve(fl - b.lh * hh.solve(fh));
  out.low_reduced = ll.solve(fl);
  const Vector d = out.low_schur - out.low_reduced;
  out.diff_energy = std::sqrt(std::max(0.0, d.dot(b.ll * d)));
  out.condensation_error =
      (out.low_schur - out.low_full).lpNorm<Eigen::Infinity>() / out.low_full.lpNorm<Eigen::Infinity>();
  return out;
}

struct SchurDecayRow {
  int cutoff = 0;
  double lambda_next = 0.0;  // λ_{M+1,M+1}
  double coupling_norm = 0.0;
  double alpha_h = 0.0;
  double gap = 0.0;
  double bound_rhs = 0.0;    // coupling²/α_H
};

struct SchurDecayReport {
  int grid_m = 0;
  std::vector<SchurDecayRow> rows;
  /// Log-log slope of coupling_norm against lambda_next; NaN when a coupling vanishes.
  double coupling_slope = std::numeric_limits<double>::quiet_NaN();
};

inline SchurDecayReport schur_decay_report(const BlockedOperator& op, const std::vector<int>& cutoffs) {
  SchurDecayReport rep;
  rep.grid_m = op.grid().m();
  std::vector<double> xs, ys;
  bool positive = true;
  for (const int cutoff : cutoffs) {
    SchurDecayRow row;
    row.cutoff = cutoff;
    row.lambda_next = eigenvalue(cutoff + 1, cutoff + 1);
    row.coupling_norm = coupling_norm(op, cutoff);
    const SchurResult s = exact_schur(op, cutoff);
    row.alpha_h = s.alpha_h;
    row.gap = s.gap;
    row.bound_rhs = row.coupling_norm * row.coupling_norm / row.alpha_h;
    rep.rows.push_back(row);
    xs.push_back(row.lambda_next);
    ys.push_back(row.coupling_norm);
    positive = positive && row.coupling_norm > 0.0;
  }
  if (positive && xs.size() >= 2) rep.coupling_slope = fit_loglog_slope(xs, ys);
  return rep;
}

}  // namespace lowmode
