#pragma once

// Geometric multigrid on nested grids m = 2^l - 1 -> (m-1)/2 -> ... -> 3, used as a
// V-cycle preconditioner for CG. Coarse operators are re-assembled from κ.

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>

#include "lowmode/assembly.hpp"
#include "lowmode/baselines/cg.hpp"
#include "lowmode/baselines/report.hpp"

namespace lowmode {

enum class Smoother { red_black_gauss_seidel, damped_jacobi };

inline std::string_view to_string(Smoother s) {
  return s == Smoother::red_black_gauss_seidel ? "rbgs" : "jacobi";
}

struct MgOptions {
  Smoother smoother = Smoother::red_black_gauss_seidel;
  int pre_smooth = 1;
  int post_smooth = 1;
  double jacobi_weight = 0.8;
  Averaging averaging = Averaging::midpoint;
};

struct MgLevel {
  Grid2D grid;
  SparseOperator a;
  Vector inv_diag;
};

inline bool is_mg_compatible(int m) {
  if (m < 3) return false;
  const int n = m + 1;
  return (n & (n - 1)) == 0;
}

class MgHierarchy {
 public:
  MgHierarchy(const Grid2D& fine, const ScalarField& kappa, MgOptions opt = {}) : opt_(opt) {
    if (!is_mg_compatible(fine.m()))
      detail::fail(ErrorCategory::grid_incompatible,
                   "multigrid needs m = 2^l - 1 with l >= 2, got m=" + std::to_string(fine.m()));
    std::vector<int> sizes;
    for (int m = fine.m(); m >= 3; m = (m - 1) / 2) sizes.push_back(m);
    for (auto it = sizes.rbegin(); it != sizes.rend(); ++it) {
      MgLevel lvl;
      lvl.grid = make_grid(*it);
      lvl.a = assemble_operator(lvl.grid, kappa, opt.averaging);
      lvl.inv_diag.resize(lvl.grid.size());
      for (Eigen::Index k = 0; k < lvl.inv_diag.size(); ++k) lvl.inv_diag[k] = 1.0 / lvl.a.diagonal(k);
      levels_.push_back(std::move(lvl));
    }
    coarse_.compute(levels_.front().a.to_dense());
    if (coarse_.info() != Eigen::Success)
      detail::fail(ErrorCategory::definiteness_failure, "coarsest multigrid operator is not positive definite");
  }

  /// Levels ordered coarse to fine.
  const std::vector<MgLevel>& levels() const noexcept { return levels_; }
  const MgOptions& options() const noexcept { return opt_; }
  const SparseOperator& fine_operator() const { return levels_.back().a; }

  /// One V(ν₁,ν₂) cycle for A x = b starting from x = 0.
  Vector v_cycle(const Vector& b) const { return cycle(levels_.size() - 1, b); }

  /// One V-cycle correction applied to the current iterate.
  void iterate(Vector& x, const Vector& b) const { x += v_cycle(b - apply_operator(fine_operator(), x)); }

 private:
  Vector cycle(std::size_t l, const Vector& b) const {
    if (l == 0) return coarse_.solve(b);
    const MgLevel& lvl = levels_[l];
    Vector x = Vector::Zero(b.size());
    smooth(lvl, x, b, opt_.pre_smooth, false);
    const Vector r = b - apply_operator(lvl.a, x);
    const Vector ec = cycle(l - 1, restrict_full_weighting(lvl.grid.m(), r));
    x += prolong_bilinear(levels_[l - 1].grid.m(), ec);
    smooth(lvl, x, b, opt_.post_smooth, true);
    return x;
  }

  void smooth(const MgLevel& lvl, Vector& x, const Vector& b, int sweeps, bool reverse) const {
    const SparseOperator& a = lvl.a;
    const auto& off = a.row_offsets();
    const auto& col = a.col_indices();
    const auto& val = a.values();
    if (opt_.smoother == Smoother::damped_jacobi) {
      for (int s = 0; s < sweeps; ++s) x += opt_.jacobi_weight * lvl.inv_diag.cwiseProduct(b - apply_operator(a, x));
      return;
    }
    const int m = lvl.grid.m();
    auto sweep_color = [&](int color) {
      for (int j = 1; j <= m; ++j)
        for (int i = 1 + ((j + 1 + color) & 1); i <= m; i += 2) {
          const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(j - 1) * m + (i - 1);
          double s = b[r];
          for (std::ptrdiff_t k = off[r]; k < off[r + 1]; ++k)
            if (col[k] != r) s -= val[k] * x[col[k]];
          x[r] = s * lvl.inv_diag[r];
        }
    };
    // Red then black before coarse correction, black then red after: the cycle stays symmetric.
    for (int s = 0; s < sweeps; ++s) {
      sweep_color(reverse ? 1 : 0);
      sweep_color(reverse ? 0 : 1);
    }
  }

  static Vector restrict_full_weighting(int mf, const Vector& r) {
    const int mc = (mf - 1) / 2;
    auto at = [&](int i, int j) -> double {
      if (i < 1 || i > mf || j < 1 || j > mf) return 0.0;
      return r[static_cast<std::ptrdiff_t>(j - 1) * mf + (i - 1)];
    };
    Vector rc(static_cast<Eigen::Index>(mc) * mc);
    for (int jc = 1; jc <= mc; ++jc)
      for (int ic = 1; ic <= mc; ++ic) {
        const int i = 2 * ic, j = 2 * jc;
        rc[static_cast<std::ptrdiff_t>(jc - 1) * mc + (ic - 1)] =
            (4.0 * at(i, j) + 2.0 * (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1)) +
             (at(i - 1, j - 1) + at(i + 1, j - 1) + at(i - 1, j + 1) + at(i + 1, j + 1))) /
            16.0;
      }
    return rc;
  }

  static Vector prolong_bilinear(int mc, const Vector& ec) {
    const int mf = 2 * mc + 1;
    auto at = [&](int ic, int jc) -> double {
      if (ic < 1 || ic > mc || jc < 1 || jc > mc) return 0.0;
      return ec[static_cast<std::ptrdiff_t>(jc - 1) * mc + (ic - 1)];
    };
    Vector ef(static_cast<Eigen::Index>(mf) * mf);
    for (int j = 1; j <= mf; ++j)
      for (int i = 1; i <= mf; ++i) {
        const int i0 = i / 2, j0 = j / 2;
        double v;
        if (i % 2 == 0 && j % 2 == 0)
          v = at(i0, j0);
        else if (i % 2 == 1 && j % 2 == 0)
          v = 0.5 * (at(i0, j0) + at(i0 + 1, j0));
        else if (i % 2 == 0)
          v = 0.5 * (at(i0, j0) + at(i0, j0 + 1));
        else
          v = 0.25 * (at(i0, j0) + at(i0 + 1, j0) + at(i0, j0 + 1) + at(i0 + 1, j0 + 1));
        ef[static_cast<std::ptrdiff_t>(j - 1) * mf + (i - 1)] = v;
      }
    return ef;
  }

  MgOptions opt_;
  std::vector<MgLevel> levels_;
  Eigen::LLT<Matrix> coarse_;
};

inline MgHierarchy build_mg_hierarchy(const Grid2D& grid, const ScalarField& kappa, MgOptions opt = {}) {
  return MgHierarchy(grid, kappa, opt);
}

/// CG preconditioned by one V-cycle per application.
inline SolveReport mg_preconditioned_cg(const SparseOperator& a, const Vector& f, const MgHierarchy& mg,
                                        CgOptions opt = {}) {
  detail::require(a.rows() == mg.fine_operator().rows(), ErrorCategory::grid_incompatible,
                  "hierarchy does not match the operator size");
  Preconditioner pc = [&mg](const Vector& r, Vector& z) { z = mg.v_cycle(r); };
  return solve_cg(a, f, opt, pc, "mg-pcg");
}

}  // namespace lowmode
