#pragma once

// Banded Cholesky for the five-point operator (half-bandwidth m in lexicographic order).
// Cost O(N·m²) = O(N²) flops and O(N·m) storage.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "lowmode/baselines/report.hpp"
#include "lowmode/sparse.hpp"
#include "lowmode/timing.hpp"

namespace lowmode {

class BandedCholesky {
 public:
  BandedCholesky() = default;
  explicit BandedCholesky(const SparseOperator& a) { factor(a); }

  void factor(const SparseOperator& a) {
    detail::require(a.rows() == a.cols(), ErrorCategory::invalid_argument, "banded Cholesky needs a square operator");
    n_ = a.rows();
    bw_ = a.bandwidth();
    const std::ptrdiff_t stride = bw_ + 1;
    band_.assign(static_cast<std::size_t>(n_ * stride), 0.0);
    // Column k holds A(k+d, k), d = 0..bw, contiguously.
    for (std::ptrdiff_t r = 0; r < n_; ++r)
      for (std::ptrdiff_t k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k) {
        const std::ptrdiff_t c = a.col_indices()[k];
        if (c <= r) band_[static_cast<std::size_t>(c * stride + (r - c))] = a.values()[k];
      }

    if (bw_ < 2 * panel_width)
      factor_unblocked();
    else
      factor_blocked();
  }

  Vector solve(const Vector& f) const {
    detail::require(f.size() == n_, ErrorCategory::invalid_argument, "banded solve: rhs size mismatch");
    const std::ptrdiff_t stride = bw_ + 1;
    Vector y = f;
    for (std::ptrdiff_t k = 0; k < n_; ++k) {
      const double* ck = &band_[static_cast<std::size_t>(k * stride)];
      y[k] /= ck[0];
      const std::ptrdiff_t len = std::min(bw_, n_ - 1 - k);
      const double yk = y[k];
      for (std::ptrdiff_t d = 1; d <= len; ++d) y[k + d] -= ck[d] * yk;
    }
    for (std::ptrdiff_t k = n_ - 1; k >= 0; --k) {
      const double* ck = &band_[static_cast<std::size_t>(k * stride)];
      const std::ptrdiff_t len = std::min(bw_, n_ - 1 - k);
      double s = y[k];
      for (std::ptrdiff_t d = 1; d <= len; ++d) s -= ck[d] * y[k + d];
      y[k] = s / ck[0];
    }
    return y;
  }

  std::ptrdiff_t bandwidth() const noexcept { return bw_; }

 private:
  static constexpr std::ptrdiff_t panel_width = 32;

  using BandBlock = Eigen::Map<Matrix, 0, Eigen::OuterStride<>>;

  // Entry (i, j) with 0 <= i - j <= bw sits at j*bw + i, so any block lying inside the band
  // is a column-major view with leading dimension bw.
  BandBlock block(std::ptrdiff_t i, std::ptrdiff_t j, std::ptrdiff_t rows, std::ptrdiff_t cols) {
    return BandBlock(band_.data() + j * bw_ + i, rows, cols, Eigen::OuterStride<>(bw_));
  }

  void check_pivots(std::ptrdiff_t i, std::ptrdiff_t ib) const {
    for (std::ptrdiff_t k = i; k < i + ib; ++k)
      if (!(band_[static_cast<std::size_t>(k * (bw_ + 1))] > 0.0))
        detail::fail(ErrorCategory::definiteness_failure, "non-positive pivot at row " + std::to_string(k));
  }

  void factor_unblocked() {
    const std::ptrdiff_t stride = bw_ + 1;
    for (std::ptrdiff_t k = 0; k < n_; ++k) {
      double* ck = &band_[static_cast<std::size_t>(k * stride)];
      if (!(ck[0] > 0.0))
        detail::fail(ErrorCategory::definiteness_failure, "non-positive pivot at row " + std::to_string(k));
      const double lkk = std::sqrt(ck[0]);
      ck[0] = lkk;
      const std::ptrdiff_t len = std::min(bw_, n_ - 1 - k);
      const double inv = 1.0 / lkk;
      for (std::ptrdiff_t d = 1; d <= len; ++d) ck[d] *= inv;
      for (std::ptrdiff_t j = 1; j <= len; ++j) {
        const double ljk = ck[j];
        if (ljk == 0.0) continue;
        double* cj = &band_[static_cast<std::size_t>((k + j) * stride)];
        const double* src = ck + j;
        const std::ptrdiff_t cnt = len - j + 1;
        for (std::ptrdiff_t t = 0; t < cnt; ++t) cj[t] -= ljk * src[t];
      }
    }
  }

  // Right-looking panel factorization in the layout of LAPACK dpbtrf. Rows i+bw.. of the
  // panel are only partly inside the band; they go through a small dense work block.
  void factor_blocked() {
    const std::ptrdiff_t kd = bw_;
    Matrix work(panel_width, panel_width);
    for (std::ptrdiff_t i = 0; i < n_; i += panel_width) {
      const std::ptrdiff_t ib = std::min(panel_width, n_ - i);
      auto a11 = block(i, i, ib, ib);
      Eigen::LLT<Eigen::Ref<Matrix, 0, Eigen::OuterStride<>>> llt(a11);
      if (llt.info() != Eigen::Success) check_pivots(i, ib);
      if (llt.info() != Eigen::Success)
        detail::fail(ErrorCategory::definiteness_failure, "non-positive pivot in block at row " + std::to_string(i));
      const auto l11 = a11.triangularView<Eigen::Lower>();
      const std::ptrdiff_t i2 = std::max<std::ptrdiff_t>(0, std::min(kd - ib, n_ - i - ib));
      const std::ptrdiff_t i3 = std::max<std::ptrdiff_t>(0, std::min(ib, n_ - i - kd));
      if (i2 > 0) {
        auto a21 = block(i + ib, i, i2, ib);
        l11.transpose().solveInPlace<Eigen::OnTheRight>(a21);
        block(i + ib, i + ib, i2, i2).triangularView<Eigen::Lower>() -= a21 * a21.transpose();
      }
      if (i3 > 0) {
        // A31 is upper triangular inside the band.
        auto w = work.topLeftCorner(i3, ib);
        w.setZero();
        for (std::ptrdiff_t jj = 0; jj < ib; ++jj)
          for (std::ptrdiff_t ii = 0; ii <= std::min(jj, i3 - 1); ++ii)
            w(ii, jj) = band_[static_cast<std::size_t>((i + jj) * kd + i + kd + ii)];
        l11.transpose().solveInPlace<Eigen::OnTheRight>(w);
        if (i2 > 0) block(i + kd, i + ib, i3, i2).noalias() -= w * block(i + ib, i, i2, ib).transpose();
        block(i + kd, i + kd, i3, i3).triangularView<Eigen::Lower>() -= w * w.transpose();
        for (std::ptrdiff_t jj = 0; jj < ib; ++jj)
          for (std::ptrdiff_t ii = 0; ii <= std::min(jj, i3 - 1); ++ii)
            band_[static_cast<std::size_t>((i + jj) * kd + i + kd + ii)] = w(ii, jj);
      }
    }
  }

  std::ptrdiff_t n_ = 0;
  std::ptrdiff_t bw_ = 0;
  std::vector<double> band_;
};

/// Factorize and solve; assembly of A is not part of the timing.
inline SolveReport solve_direct(const SparseOperator& a, const Vector& f) {
  SolveReport rep;
  rep.solver_id = "direct-banded-cholesky";
  Stopwatch sw;
  const BandedCholesky chol(a);
  rep.setup_time_s = sw.seconds();
  rep.solution = chol.solve(f);
  rep.wall_time_s = sw.seconds();
  const double fn = f.norm();
  rep.relative_residual = fn > 0.0 ? residual(a, rep.solution, f).norm() / fn : residual(a, rep.solution, f).norm();
  rep.residual_history = {rep.relative_residual};
  return rep;
}

}  // namespace lowmode
