#include "aggflex/parallel.hpp"

#include <atomic>
#include <exception>

#include <omp.h>

namespace aggflex {

namespace {
std::atomic<int> g_threads{0};
}

void set_worker_threads(int count) {
    g_threads.store(count < 0 ? 0 : count);
}

int worker_threads() {
    const int configured = g_threads.load();
    return configured > 0 ? configured : omp_get_max_threads();
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
    const int threads = worker_threads();
    // Exceptions may not unwind across an OpenMP region; capture the first
    // one and rethrow on the calling thread.
    std::exception_ptr error = nullptr;
    std::atomic<bool> failed{false};
#pragma omp parallel for schedule(dynamic) num_threads(threads) shared(error, failed)
    for (std::int64_t i = 0; i < n; ++i) {
        if (failed.load(std::memory_order_relaxed)) {
            continue;
        }
        try {
            body(i);
        } catch (...) {
#pragma omp critical(aggflex_parallel_error)
            {
                if (!error) {
                    error = std::current_exception();
                    failed.store(true);
                }
            }
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

void serial_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
    for (std::int64_t i = 0; i < n; ++i) {
        body(i);
    }
}

void maybe_parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
    if (worker_threads() <= 1 || n <= 1) {
        serial_for(n, body);
    } else {
        parallel_for(n, body);
    }
}

} // namespace aggflex
