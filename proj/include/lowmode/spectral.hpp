#pragma once

// Dirichlet-Laplacian eigenmodes of the unit square sampled on the grid: the basis matrix B,
// tensor-product sine transforms, and the analytic tail weight.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "lowmode/errors.hpp"
#include "lowmode/grid.hpp"

namespace lowmode {

/// Continuum eigenvalue π²(p² + q²).
inline double eigenvalue(int p, int q) {
  detail::require(p >= 1 && q >= 1, ErrorCategory::invalid_argument,
                  "mode indices must be >= 1, got (" + std::to_string(p) + "," + std::to_string(q) + ")");
  using std::numbers::pi;
  return pi * pi * (static_cast<double>(p) * p + static_cast<double>(q) * q);
}

/// Eigenvalue of the κ≡1 five-point operator for the sampled mode (p,q).
inline double discrete_eigenvalue(const Grid2D& grid, int p, int q) {
  using std::numbers::pi;
  const double h = grid.h();
  const double sp = std::sin(p * pi * h / 2.0), sq = std::sin(q * pi * h / 2.0);
  return 4.0 / (h * h) * (sp * sp + sq * sq);
}

struct ModeIndex {
  int p = 1;  // x-frequency
  int q = 1;  // y-frequency
  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

enum class Normalization { raw, mass_orthonormal };

inline std::string_view to_string(Normalization n) { return n == Normalization::raw ? "raw" : "mass-orthonormal"; }

/// S(i-1, p-1) = sin(pπ·i·h), i = 1..m, p = 1..cols.
inline Matrix sine_table(const Grid2D& grid, int cols) {
  using std::numbers::pi;
  const int m = grid.m();
  Matrix s(m, cols);
  for (int p = 1; p <= cols; ++p)
    for (int i = 1; i <= m; ++i) s(i - 1, p - 1) = std::sin(static_cast<double>(p) * i * pi * grid.h());
  return s;
}

/// Sampled sine modes with 1 <= p, q <= M, column (p,q) at (p-1)*M + q-1.
class SpectralBasis {
 public:
  SpectralBasis(const Grid2D& grid, int cutoff, Normalization norm, Matrix columns, std::string label)
      : grid_(grid), cutoff_(cutoff), norm_(norm), b_(std::move(columns)), label_(std::move(label)) {}

  const Grid2D& grid() const noexcept { return grid_; }
  int cutoff() const noexcept { return cutoff_; }
  Eigen::Index dimension() const noexcept { return static_cast<Eigen::Index>(cutoff_) * cutoff_; }
  Normalization normalization() const noexcept { return norm_; }
  const Matrix& matrix() const noexcept { return b_; }
  const std::string& label() const noexcept { return label_; }

  Eigen::Index column(ModeIndex mode) const {
    detail::require(mode.p >= 1 && mode.q >= 1 && mode.p <= cutoff_ && mode.q <= cutoff_,
                    ErrorCategory::invalid_argument, "mode outside the retained index set");
    return static_cast<Eigen::Index>(mode.p - 1) * cutoff_ + (mode.q - 1);
  }

  ModeIndex mode(Eigen::Index column) const {
    return {static_cast<int>(column / cutoff_) + 1, static_cast<int>(column % cutoff_) + 1};
  }

 private:
  Grid2D grid_;
  int cutoff_;
  Normalization norm_;
  Matrix b_;
  std::string label_;
};

namespace detail {

inline void check_cutoff(const Grid2D& grid, int cutoff) {
  require(cutoff >= 1, ErrorCategory::invalid_argument, "spectral cutoff must be >= 1");
  if (cutoff > grid.m())
    fail(ErrorCategory::nyquist_violation, "cutoff M=" + std::to_string(cutoff) + " exceeds the grid Nyquist index m=" +
                                               std::to_string(grid.m()));
}

// Tensor-product fill: column (p,q) = outer(S_q, S_p) flattened with i fastest.
inline Matrix tensor_columns(const Grid2D& grid, const Matrix& sx, const Matrix& sy, double scale = 1.0) {
  const int m = grid.m();
  const auto cutoff = sx.cols();
  Matrix b(grid.size(), cutoff * cutoff);
  for (Eigen::Index p = 0; p < cutoff; ++p)
    for (Eigen::Index q = 0; q < cutoff; ++q) {
      auto col = b.col(p * cutoff + q);
      for (int j = 0; j < m; ++j) col.segment(static_cast<Eigen::Index>(j) * m, m) = sx.col(p) * (scale * sy(j, q));
    }
  return b;
}

}  // namespace detail

/// Nodal interpolation of the modes. Raw columns are orthogonal with squared norm ((m+1)/2)²;
/// the mass-orthonormal variant scales them by 2 so that h²·BᵀB = I.
inline SpectralBasis build_basis(const Grid2D& grid, int cutoff, Normalization norm = Normalization::mass_orthonormal) {
  detail::check_cutoff(grid, cutoff);
  const Matrix s = sine_table(grid, cutoff);
  const double scale = norm == Normalization::mass_orthonormal ? 2.0 / (grid.h() * (grid.m() + 1)) : 1.0;
  Matrix b = detail::tensor_columns(grid, s, s, scale);
  return SpectralBasis(grid, cutoff, norm, std::move(b), "interp");
}

/// Orthonormalizes columns against the lumped mass h²I by Cholesky of the Gram matrix.
inline Matrix mass_orthonormalize(const Grid2D& grid, const Matrix& columns) {
  const double h2 = grid.h() * grid.h();
  Matrix gram = h2 * (columns.transpose() * columns);
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success)
    detail::fail(ErrorCategory::definiteness_failure, "basis Gram matrix is not positive definite");
  // B R⁻¹ with gram = RᵀR.
  Matrix rt = llt.matrixU();
  return rt.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(columns);
}

/// L² projection of each mode onto bilinear hat functions with the lumped mass h²I,
/// followed by mass-orthonormalization. Hat moments are exact:
/// ∫ sin(pπx) ψ_i dx = h·sin(pπx_i)·sinc²(pπh/2).
inline SpectralBasis build_projected_basis(const Grid2D& grid, int cutoff) {
  detail::check_cutoff(grid, cutoff);
  using std::numbers::pi;
  Matrix s = sine_table(grid, cutoff);
  for (int p = 1; p <= cutoff; ++p) {
    const double t = p * pi * grid.h() / 2.0;
    const double sinc = std::sin(t) / t;
    s.col(p - 1) *= sinc * sinc;
  }
  Matrix b = mass_orthonormalize(grid, detail::tensor_columns(grid, s, s));
  return SpectralBasis(grid, cutoff, Normalization::mass_orthonormal, std::move(b), "proj");
}

/// Applies B (raw sine modes up to `cutoff`, times `scale`) without forming it; each
/// application is two GEMMs on the m×m node array, O(N·M) work.
class TensorSineBasis {
 public:
  TensorSineBasis(const Grid2D& grid, int cutoff, double scale = 1.0)
      : grid_(grid), cutoff_(cutoff), scale_(scale) {
    detail::check_cutoff(grid, cutoff);
    s_ = sine_table(grid, cutoff);
  }

  const Grid2D& grid() const noexcept { return grid_; }
  int cutoff() const noexcept { return cutoff_; }
  double scale() const noexcept { return scale_; }
  /// Unscaled 1-D table S(i-1, p-1) = sin(pπ·i·h).
  const Matrix& table() const noexcept { return s_; }

  /// Rows of B for grid lines [j0, j1) (0-based) into the top rows of `out`:
  /// B(j·m + i, p·M + q) = scale·S(i,p)·S(j,q).
  void lines(int j0, int j1, Matrix& out) const {
    const int m = grid_.m();
    const Eigen::Index mc = cutoff_;
    detail::require(0 <= j0 && j0 <= j1 && j1 <= m && out.rows() >= static_cast<Eigen::Index>(j1 - j0) * m &&
                        out.cols() == mc * mc,
                    ErrorCategory::invalid_argument, "tensor basis: bad line range");
    for (Eigen::Index p = 0; p < mc; ++p)
      for (Eigen::Index q = 0; q < mc; ++q) {
        double* col = out.col(p * mc + q).data();
        for (int j = j0; j < j1; ++j)
          Eigen::Map<Vector>(col + static_cast<Eigen::Index>(j - j0) * m, m) = s_.col(p) * (scale_ * s_(j, q));
      }
  }

  /// u = B z.
  Vector apply(const Vector& z) const {
    const Eigen::Index mc = cutoff_;
    detail::require(z.size() == mc * mc, ErrorCategory::invalid_argument, "tensor basis: coefficient size mismatch");
    // z[(p-1)M + (q-1)] viewed column-major as Zt(q, p).
    Eigen::Map<const Matrix> zt(z.data(), mc, mc);
    Vector u(grid_.size());
    Eigen::Map<Matrix> un(u.data(), grid_.m(), grid_.m());  // un(i, j)
    un.noalias() = (s_ * zt.transpose()) * s_.transpose();
    if (scale_ != 1.0) u *= scale_;
    return u;
  }

  /// z = Bᵀ u.
  Vector apply_transpose(const Vector& u) const {
    detail::require(u.size() == grid_.size(), ErrorCategory::invalid_argument, "tensor basis: grid size mismatch");
    const Eigen::Index mc = cutoff_;
    Eigen::Map<const Matrix> un(u.data(), grid_.m(), grid_.m());
    Vector z(mc * mc);
    Eigen::Map<Matrix> zt(z.data(), mc, mc);  // zt(q, p)
    zt.noalias() = (s_.transpose() * un.transpose()) * s_;
    if (scale_ != 1.0) z *= scale_;
    return z;
  }

 private:
  Grid2D grid_;
  int cutoff_;
  double scale_;
  Matrix s_;
};

/// Sine synthesis over the full index set (p,q) <= m: v = Σ c_pq sin(pπx) sin(qπy).
inline GridFunction dst2_synthesize(const Grid2D& grid, const Vector& coeffs) {
  detail::require(coeffs.size() == grid.size(), ErrorCategory::invalid_argument,
                  "dst2_synthesize: expected " + std::to_string(grid.size()) + " coefficients");
  return GridFunction(grid, TensorSineBasis(grid, grid.m()).apply(coeffs));
}

/// Inverse of dst2_synthesize, using discrete orthogonality Σ_i sin(pπih) sin(rπih) = (m+1)/2 δ_pr.
inline Vector dst2_analyze(const Grid2D& grid, const Vector& v) {
  detail::require(v.size() == grid.size(), ErrorCategory::invalid_argument,
                  "dst2_analyze: expected " + std::to_string(grid.size()) + " values");
  const double c = 2.0 / (grid.m() + 1);
  return TensorSineBasis(grid, grid.m(), c * c).apply_transpose(v);
}

inline Eigen::Index dst2_slot(const Grid2D& grid, int p, int q) {
  return static_cast<Eigen::Index>(p - 1) * grid.m() + (q - 1);
}

/// Discrete H¹ seminorm of v − Π_M v, where Π_M keeps sine coefficients with p, q <= M.
inline double projection_error_h1(const Grid2D& grid, const Vector& v, int cutoff) {
  detail::check_cutoff(grid, cutoff);
  Vector c = dst2_analyze(grid, v);
  for (int p = 1; p <= cutoff; ++p)
    for (int q = 1; q <= cutoff; ++q) c[dst2_slot(grid, p, q)] = 0.0;
  return discrete_h1_seminorm(grid, dst2_synthesize(grid, c).values);
}

struct TailWeight {
  int cutoff = 0;
  long summation_bound = 0;
  double value = 0.0;
  /// Upper bound on the neglected part Σ_{max(m,n) > R} 1/λ², namely 1/(4π³R²).
  double remainder_bound = 0.0;
};

enum class TailOrder { rows, diagonals };

namespace detail {

// Neumaier compensated accumulator.
struct CompensatedSum {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace detail

/// W_M = Σ_{m>M or n>M} 1/λ_{mn}², truncated to indices <= summation_bound. cutoff = 0 gives
/// the full sum. The two orders visit the same terms and exist to cross-check each other.
inline TailWeight tail_weight(int cutoff, long summation_bound = 10000, TailOrder order = TailOrder::rows) {
  using std::numbers::pi;
  detail::require(cutoff >= 0, ErrorCategory::invalid_argument, "tail weight cutoff must be >= 0");
  detail::require(summation_bound >= 4L * cutoff && summation_bound >= 1, ErrorCategory::invalid_argument,
                  "summation bound must be at least 4*M");
  const long r = summation_bound;
  const long mc = cutoff;
  auto term = [](long a, long b) {
    const double s = static_cast<double>(a * a + b * b);
    return 1.0 / (s * s);
  };
  detail::CompensatedSum total;
  if (order == TailOrder::rows) {
    for (long a = 1; a <= r; ++a) {
      detail::CompensatedSum row;
      for (long b = (a <= mc ? mc + 1 : 1); b <= r; ++b) row.add(term(a, b));
      total.add(row.value());
    }
  } else {
    for (long d = 2; d <= 2 * r; ++d) {
      detail::CompensatedSum diag;
      const long lo = std::max(1L, d - r), hi = std::min(r, d - 1);
      for (long a = lo; a <= hi; ++a) {
        const long b = d - a;
        if (a <= mc && b <= mc) continue;
        diag.add(term(a, b));
      }
      total.add(diag.value());
    }
  }
  TailWeight w;
  w.cutoff = cutoff;
  w.summation_bound = r;
  w.value = total.value() / (pi * pi * pi * pi);
  w.remainder_bound = 1.0 / (4.0 * pi * pi * pi * static_cast<double>(r) * static_cast<double>(r));
  return w;
}

}  // namespace lowmode
