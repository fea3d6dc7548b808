#ifndef AGGFLEX_PARALLEL_HPP
#define AGGFLEX_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace aggflex {

/// Number of worker threads used by the parallel kernels. 0 selects the
/// hardware thread count. Setting it to 1 forces the serial paths.
void set_worker_threads(int count);
int worker_threads();

/// OpenMP-backed loop over [0, n). Each index must be independent; the
/// serial reference paths call the same body so serial and parallel
/// results are bitwise identical.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

void serial_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

/// Dispatches to parallel_for unless a single worker is configured.
void maybe_parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

} // namespace aggflex

#endif
