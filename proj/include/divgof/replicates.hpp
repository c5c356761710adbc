#pragma once

#include <cstddef>
#include <functional>

namespace divgof {

enum class Execution { serial, parallel };

struct ParallelOptions {
    Execution exec = Execution::parallel;
    int workers = 0;  // 0: OpenMP default
};

int worker_count(const ParallelOptions& opts);

// Calls body(i, worker) for every i in [0, n). Replicate i must draw only from
// its own stream so results do not depend on the schedule. The serial path is
// the reference the parallel one is tested against.
void parallel_for(std::size_t n, const ParallelOptions& opts, const std::function<void(std::size_t, int)>& body);

}  // namespace divgof
