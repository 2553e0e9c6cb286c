#pragma once

// Compressed sparse row storage for the symmetric five-point operator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "lowmode/errors.hpp"
#include "lowmode/grid.hpp"

namespace lowmode {

class SparseOperator {
 public:
  SparseOperator() = default;

  /// Takes ownership of CSR arrays; column indices must be sorted within each row.
  SparseOperator(std::ptrdiff_t rows, std::ptrdiff_t cols, std::vector<std::ptrdiff_t> row_offsets,
                 std::vector<std::ptrdiff_t> col_indices, std::vector<double> values)
      : rows_(rows),
        cols_(cols),
        offsets_(std::move(row_offsets)),
        cols_idx_(std::move(col_indices)),
        values_(std::move(values)) {
    detail::require(static_cast<std::ptrdiff_t>(offsets_.size()) == rows_ + 1, ErrorCategory::invalid_argument,
                    "CSR: row offset array must have rows+1 entries");
    detail::require(cols_idx_.size() == values_.size(), ErrorCategory::invalid_argument,
                    "CSR: column and value arrays differ in length");
    detail::require(offsets_.back() == static_cast<std::ptrdiff_t>(values_.size()),
                    ErrorCategory::invalid_argument, "CSR: last offset must equal nnz");
  }

  std::ptrdiff_t rows() const noexcept { return rows_; }
  std::ptrdiff_t cols() const noexcept { return cols_; }
  std::ptrdiff_t nnz() const noexcept { return static_cast<std::ptrdiff_t>(values_.size()); }

  const std::vector<std::ptrdiff_t>& row_offsets() const noexcept { return offsets_; }
  const std::vector<std::ptrdiff_t>& col_indices() const noexcept { return cols_idx_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Entry (r, c), zero when not stored.
  double coeff(std::ptrdiff_t r, std::ptrdiff_t c) const {
    const auto first = cols_idx_.begin() + offsets_[r];
    const auto last = cols_idx_.begin() + offsets_[r + 1];
    const auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return 0.0;
    return values_[static_cast<std::size_t>(it - cols_idx_.begin())];
  }

  double diagonal(std::ptrdiff_t r) const { return coeff(r, r); }

  /// y = A x without allocation.
  void multiply(const Vector& x, Vector& y) const {
    y.resize(rows_);
    for (std::ptrdiff_t r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (std::ptrdiff_t k = offsets_[r]; k < offsets_[r + 1]; ++k) s += values_[k] * x[cols_idx_[k]];
      y[r] = s;
    }
  }

  /// Y = A X for a dense block of columns.
  Matrix multiply(const Matrix& x) const {
    detail::require(x.rows() == cols_, ErrorCategory::invalid_argument, "sparse*dense: dimension mismatch");
    Matrix y(rows_, x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double* xc = x.col(c).data();
      double* yc = y.col(c).data();
      for (std::ptrdiff_t r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (std::ptrdiff_t k = offsets_[r]; k < offsets_[r + 1]; ++k) s += values_[k] * xc[cols_idx_[k]];
        yc[r] = s;
      }
    }
    return y;
  }

  /// Rows [first, first + count) of A X, written into the top rows of `y`. `x` holds rows
  /// [x_first, x_first + x.rows()) of the operand; every column referenced by the selected
  /// rows must fall in that range.
  void multiply_rows(const Matrix& x, std::ptrdiff_t first, std::ptrdiff_t count, Matrix& y,
                     std::ptrdiff_t x_first = 0) const {
    detail::require(first >= 0 && first + count <= rows_ && x_first >= 0 && x_first + x.rows() <= cols_ &&
                        y.rows() >= count && y.cols() == x.cols(),
                    ErrorCategory::invalid_argument, "sparse*dense rows: dimension mismatch");
    for (std::ptrdiff_t r = first; r < first + count; ++r)
      if (offsets_[r] < offsets_[r + 1])
        detail::require(cols_idx_[offsets_[r]] >= x_first && cols_idx_[offsets_[r + 1] - 1] < x_first + x.rows(),
                        ErrorCategory::invalid_argument, "sparse*dense rows: operand window too small");
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double* xc = x.col(c).data() - x_first;
      double* yc = y.col(c).data();
      for (std::ptrdiff_t i = 0; i < count; ++i) {
        const std::ptrdiff_t r = first + i;
        double s = 0.0;
        for (std::ptrdiff_t k = offsets_[r]; k < offsets_[r + 1]; ++k) s += values_[k] * xc[cols_idx_[k]];
        yc[i] = s;
      }
    }
  }

  /// Largest |i - j| over stored entries.
  std::ptrdiff_t bandwidth() const {
    std::ptrdiff_t b = 0;
    for (std::ptrdiff_t r = 0; r < rows_; ++r)
      for (std::ptrdiff_t k = offsets_[r]; k < offsets_[r + 1]; ++k) b = std::max(b, std::abs(cols_idx_[k] - r));
    return b;
  }

  /// max |A_ij - A_ji| over stored entries; exactly 0 for symmetric assembly.
  double asymmetry() const {
    double worst = 0.0;
    for (std::ptrdiff_t r = 0; r < rows_; ++r)
      for (std::ptrdiff_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
        worst = std::max(worst, std::abs(values_[k] - coeff(cols_idx_[k], r)));
    return worst;
  }

  Matrix to_dense() const {
    Matrix d = Matrix::Zero(rows_, cols_);
    for (std::ptrdiff_t r = 0; r < rows_; ++r)
      for (std::ptrdiff_t k = offsets_[r]; k < offsets_[r + 1]; ++k) d(r, cols_idx_[k]) = values_[k];
    return d;
  }

  /// Identity operator of size n; handy for solver tests.
  static SparseOperator identity(std::ptrdiff_t n) {
    std::vector<std::ptrdiff_t> off(static_cast<std::size_t>(n) + 1), col(static_cast<std::size_t>(n));
    for (std::ptrdiff_t i = 0; i <= n; ++i) off[i] = i;
    for (std::ptrdiff_t i = 0; i < n; ++i) col[i] = i;
    return SparseOperator(n, n, std::move(off), std::move(col), std::vector<double>(static_cast<std::size_t>(n), 1.0));
  }

 private:
  std::ptrdiff_t rows_ = 0, cols_ = 0;
  std::vector<std::ptrdiff_t> offsets_{0};
  std::vector<std::ptrdiff_t> cols_idx_;
  std::vector<double> values_;
};

inline Vector apply_operator(const SparseOperator& a, const Vector& v) {
  detail::require(a.cols() == v.size(), ErrorCategory::invalid_argument,
                  "apply_operator: operator has " + std::to_string(a.cols()) + " columns, vector has " +
                      std::to_string(v.size()));
  Vector y;
  a.multiply(v, y);
  return y;
}

/// F - A u.
inline Vector residual(const SparseOperator& a, const Vector& u, const Vector& f) {
  detail::require(a.rows() == f.size(), ErrorCategory::invalid_argument, "residual: rhs size mismatch");
  return f - apply_operator(a, u);
}

/// Writes the lower triangle in Matrix Market coordinate format (1-based).
inline void write_matrix_market(const SparseOperator& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) detail::fail(ErrorCategory::io, "cannot open " + path + " for writing");
  std::ptrdiff_t lower = 0;
  for (std::ptrdiff_t r = 0; r < a.rows(); ++r)
    for (std::ptrdiff_t k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k)
      if (a.col_indices()[k] <= r) ++lower;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << a.rows() << ' ' << a.cols() << ' ' << lower << '\n';
  out << std::setprecision(17);
  for (std::ptrdiff_t r = 0; r < a.rows(); ++r)
    for (std::ptrdiff_t k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k)
      if (a.col_indices()[k] <= r) out << (r + 1) << ' ' << (a.col_indices()[k] + 1) << ' ' << a.values()[k] << '\n';
  if (!out) detail::fail(ErrorCategory::io, "write failed for " + path);
}

}  // namespace lowmode
