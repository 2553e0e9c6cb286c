#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lowmode/errors.hpp"
#include "lowmode/grid.hpp"

namespace lowmode {

struct SolveReport {
  std::string solver_id;
  Vector solution;
  int iterations = 0;
  double relative_residual = 0.0;
  double wall_time_s = 0.0;
  double setup_time_s = 0.0;  // factorization, hierarchy or coarse-space construction
  std::vector<double> residual_history;  // ‖r_k‖₂/‖F‖₂, starting with the initial guess
  std::vector<double> energy_history;    // ½uᵀAu − uᵀF per iterate (CG variants)
  double max_coarse_residual = 0.0;      // deflation only: max_k ‖Bᵀr_k‖∞/‖BᵀF‖∞
};

/// Thrown when an iterative solver exhausts its budget; carries the partial report.
class ConvergenceFailure : public Error {
 public:
  explicit ConvergenceFailure(SolveReport report)
      : Error(ErrorCategory::convergence_failure,
              report.solver_id + " did not converge in " + std::to_string(report.iterations) +
                  " iterations (relative residual " + std::to_string(report.relative_residual) + ")"),
        report_(std::move(report)) {}

  const SolveReport& report() const noexcept { return report_; }

 private:
  SolveReport report_;
};

}  // namespace lowmode
