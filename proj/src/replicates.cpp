#include "divgof/replicates.hpp"

#include <exception>
#include <mutex>

#include <omp.h>

namespace divgof {

int worker_count(const ParallelOptions& opts) {
    if (opts.exec == Execution::serial) return 1;
    return opts.workers > 0 ? opts.workers : omp_get_max_threads();
}

void parallel_for(std::size_t n, const ParallelOptions& opts, const std::function<void(std::size_t, int)>& body) {
    if (opts.exec == Execution::serial) {
        for (std::size_t i = 0; i < n; ++i) body(i, 0);
        return;
    }
    const int workers = worker_count(opts);
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 64) num_threads(workers)
    for (long long i = 0; i < count; ++i) {
        {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (error) continue;
        }
        try {
            body(static_cast<std::size_t>(i), omp_get_thread_num());
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace divgof
