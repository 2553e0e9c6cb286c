#pragma once

// Deflated conjugate gradients with the sampled eigenmodes as deflation space.
//
// With W = A·B and E = BᵀAB, the starting guess u₀ = B E⁻¹ BᵀF leaves Bᵀr₀ = 0, and the
// search directions are kept A-orthogonal to range(B) by p ← p − B E⁻¹ Wᵀ r. Every iterate
// then satisfies Bᵀ(F − A u_k) = 0, which is equivalent to running CG on P A ũ = P F with
// P = I − A B E⁻¹ Bᵀ and assembling u = B E⁻¹ BᵀF + Pᵀũ.

#include <cmath>

#include <Eigen/Cholesky>

#include "lowmode/baselines/cg.hpp"
#include "lowmode/baselines/report.hpp"
#include "lowmode/spectral.hpp"

namespace lowmode {

inline SolveReport solve_deflated_cg(const SparseOperator& a, const Vector& f, const SpectralBasis& basis,
                                     CgOptions opt = {}) {
  const Matrix& b = basis.matrix();
  detail::require(a.rows() == f.size() && b.rows() == f.size(), ErrorCategory::invalid_argument,
                  "solve_deflated_cg: size mismatch");
  SolveReport rep;
  rep.solver_id = "deflated-cg";
  Stopwatch sw;

  const Matrix w = a.multiply(b);
  Matrix e = b.transpose() * w;
  e = 0.5 * (e + e.transpose()).eval();
  const Eigen::LLT<Matrix> coarse(e);
  if (coarse.info() != Eigen::Success)
    detail::fail(ErrorCategory::definiteness_failure, "deflation coarse matrix BᵀAB is singular or indefinite");
  rep.setup_time_s = sw.seconds();

  const double fnorm = f.norm();
  const Vector btf = b.transpose() * f;
  const double btf_inf = btf.lpNorm<Eigen::Infinity>();
  auto coarse_residual = [&](const Vector& r) {
    return btf_inf > 0.0 ? (b.transpose() * r).lpNorm<Eigen::Infinity>() / btf_inf : 0.0;
  };

  Vector& u = rep.solution;
  u = b * coarse.solve(btf);
  Vector r = f - apply_operator(a, u);
  Vector ad(f.size());
  auto deflate = [&](const Vector& v) -> Vector { return v - b * coarse.solve(w.transpose() * v); };

  double rel = fnorm > 0.0 ? r.norm() / fnorm : 0.0;
  rep.residual_history.push_back(rel);
  rep.energy_history.push_back(-0.5 * u.dot(f + r));
  rep.max_coarse_residual = coarse_residual(r);

  Vector d = deflate(r);
  double rr = r.squaredNorm();
  int it = 0;
  while (rel > opt.tol) {
    if (it == opt.max_iter) {
      rep.iterations = it;
      rep.relative_residual = rel;
      rep.wall_time_s = sw.seconds();
      throw ConvergenceFailure(std::move(rep));
    }
    a.multiply(d, ad);
    const double dad = d.dot(ad);
    if (!(dad > 0.0)) detail::fail(ErrorCategory::definiteness_failure, "deflated CG met dᵀAd <= 0");
    const double alpha = rr / dad;
    u += alpha * d;
    r -= alpha * ad;
    ++it;
    rel = r.norm() / fnorm;
    rep.residual_history.push_back(rel);
    rep.energy_history.push_back(-0.5 * u.dot(f + r));
    rep.max_coarse_residual = std::max(rep.max_coarse_residual, coarse_residual(r));
    if (rel <= opt.tol) break;
    const double rr_new = r.squaredNorm();
    d = deflate(r) + (rr_new / rr) * d;
    rr = rr_new;
  }
  rep.iterations = it;
  const Vector true_r = residual(a, u, f);
  rep.relative_residual = fnorm > 0.0 ? true_r.norm() / fnorm : true_r.norm();
  rep.wall_time_s = sw.seconds();
  return rep;
}

}  // namespace lowmode
