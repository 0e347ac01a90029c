#pragma once

// OpenMP helpers. Reductions are blocked with a block size that does not
// depend on the thread count, and block partials are combined in index order,
// so results are bitwise identical for any number of threads.

#include <cstddef>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace evf::par {

inline constexpr std::size_t kReductionBlock = 1024;

/// Caps kernel parallelism. `n <= 0` leaves the OpenMP default.
void set_max_threads(int n);
int max_threads();
/// Applies EVARFLUID_THREADS when set; returns the effective thread cap.
int configure_from_env();

template <class F>
void for_each(std::size_t n, F&& f) {
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
}

/// Deterministic sum of f(i) for i in [0, n).
template <class F>
double ordered_sum(std::size_t n, F&& f) {
  const std::size_t nblocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(nblocks, 0.0);
  const auto count = static_cast<std::int64_t>(nblocks);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < count; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = lo + kReductionBlock < n ? lo + kReductionBlock : n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

}  // namespace evf::par
