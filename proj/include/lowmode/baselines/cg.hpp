#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "lowmode/baselines/report.hpp"
#include "lowmode/sparse.hpp"
#include "lowmode/timing.hpp"

namespace lowmode {

/// z = M⁻¹ r. May vary slightly between applications (e.g. a multigrid cycle).
using Preconditioner = std::function<void(const Vector& r, Vector& z)>;

struct CgOptions {
  double tol = 1e-10;
  int max_iter = 10000;
};

/// Conjugate gradients on A u = F from u = 0, stopping at ‖F − Au‖₂/‖F‖₂ <= tol.
/// With a preconditioner, β uses the Polak–Ribière form so a slightly nonstationary
/// preconditioner is tolerated (flexible CG).
inline SolveReport solve_cg(const SparseOperator& a, const Vector& f, CgOptions opt = {},
                            const std::optional<Preconditioner>& precond = std::nullopt,
                            std::string solver_id = "") {
  detail::require(a.rows() == a.cols() && a.rows() == f.size(), ErrorCategory::invalid_argument,
                  "solve_cg: operator and rhs sizes disagree");
  detail::require(opt.tol > 0.0, ErrorCategory::invalid_argument, "solve_cg: tolerance must be positive");
  SolveReport rep;
  rep.solver_id = solver_id.empty() ? (precond ? "pcg" : "cg") : std::move(solver_id);
  Stopwatch sw;

  const Eigen::Index n = f.size();
  rep.solution = Vector::Zero(n);
  const double fnorm = f.norm();
  if (fnorm == 0.0) {
    rep.residual_history = {0.0};
    rep.energy_history = {0.0};
    rep.wall_time_s = sw.seconds();
    return rep;
  }

  Vector& u = rep.solution;
  Vector r = f;
  Vector z(n), ad(n);
  auto apply_m = [&](const Vector& in, Vector& out) {
    if (precond)
      (*precond)(in, out);
    else
      out = in;
  };
  apply_m(r, z);
  Vector d = z;
  double rz = r.dot(z);
  rep.residual_history.push_back(1.0);
  rep.energy_history.push_back(0.0);

  int it = 0;
  double rel = 1.0;
  while (rel > opt.tol) {
    if (it == opt.max_iter) {
      rep.iterations = it;
      rep.relative_residual = rel;
      rep.wall_time_s = sw.seconds();
      throw ConvergenceFailure(std::move(rep));
    }
    a.multiply(d, ad);
    const double dad = d.dot(ad);
    if (!(dad > 0.0)) detail::fail(ErrorCategory::definiteness_failure, "CG met a direction with dᵀAd <= 0");
    const double alpha = rz / dad;
    u += alpha * d;
    Vector r_old;
    if (precond) r_old = r;
    r -= alpha * ad;
    ++it;
    rel = r.norm() / fnorm;
    rep.residual_history.push_back(rel);
    // ½uᵀAu − uᵀF with Au = F − r.
    rep.energy_history.push_back(-0.5 * u.dot(f + r));
    if (rel <= opt.tol) break;
    apply_m(r, z);
    double beta;
    if (precond) {
      beta = z.dot(r - r_old) / rz;
      rz = r.dot(z);
    } else {
      const double rz_new = r.dot(z);
      beta = rz_new / rz;
      rz = rz_new;
    }
    d = z + beta * d;
  }
  rep.iterations = it;
  rep.relative_residual = residual(a, u, f).norm() / fnorm;
  rep.wall_time_s = sw.seconds();
  return rep;
}

}  // namespace lowmode
