#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lowmode {

enum class ErrorCategory {
  invalid_argument,
  evaluation,
  ellipticity_violation,
  nyquist_violation,
  definiteness_failure,
  convergence_failure,
  grid_incompatible,
  feasibility,
  io,
  consistency,
};

inline std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_argument: return "invalid-argument";
    case ErrorCategory::evaluation: return "evaluation-error";
    case ErrorCategory::ellipticity_violation: return "ellipticity-violation";
    case ErrorCategory::nyquist_violation: return "nyquist-violation";
    case ErrorCategory::definiteness_failure: return "definiteness-failure";
    case ErrorCategory::convergence_failure: return "convergence-failure";
    case ErrorCategory::grid_incompatible: return "grid-incompatible";
    case ErrorCategory::feasibility: return "feasibility";
    case ErrorCategory::io: return "io-error";
    case ErrorCategory::consistency: return "consistency-failure";
  }
  return "unknown";
}

/// Process exit code used by the CLI for each failure category.
inline int exit_code(ErrorCategory c) { return 10 + static_cast<int>(c); }

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(std::string(category_name(category)) + ": " + what),
        category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCategory c, const std::string& msg) { throw Error(c, msg); }

inline void require(bool cond, ErrorCategory c, const std::string& msg) {
  if (!cond) fail(c, msg);
}

}  // namespace detail
}  // namespace lowmode
