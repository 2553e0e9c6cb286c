#pragma once

#include <algorithm>
#include <chrono>
#include <vector>

#include "lowmode/errors.hpp"

namespace lowmode {

class Stopwatch {
 public:
  Stopwatch() : start_(clock::now()) {}
  void reset() { start_ = clock::now(); }
  double seconds() const { return std::chrono::duration<double>(clock::now() - start_).count(); }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_;
};

inline double median(std::vector<double> v) {
  detail::require(!v.empty(), ErrorCategory::invalid_argument, "median of empty sample");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Median wall time of `reps` calls of fn(), after one untimed warm-up call.
template <class Fn>
double median_time(int reps, Fn&& fn) {
  detail::require(reps >= 1, ErrorCategory::invalid_argument, "repetitions must be >= 1");
  fn();
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    Stopwatch sw;
    fn();
    t.push_back(sw.seconds());
  }
  return median(std::move(t));
}

}  // namespace lowmode
