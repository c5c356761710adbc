#include <doctest.h>

#include <atomic>
#include <stdexcept>
#include <vector>

#include "divgof/replicates.hpp"
#include "divgof/error.hpp"

using namespace divgof;

TEST_CASE("every index is visited exactly once") {
    for (Execution exec : {Execution::serial, Execution::parallel}) {
        for (std::size_t n : {0, 1, 63, 64, 65, 1000}) {
            std::vector<std::atomic<int>> hits(n);
            parallel_for(n, {exec, 3}, [&](std::size_t i, int) { hits[i]++; });
            for (std::size_t i = 0; i < n; ++i) CHECK(hits[i] == 1);
        }
    }
}

TEST_CASE("worker ids stay within the worker count") {
    const ParallelOptions opts{Execution::parallel, 3};
    CHECK(worker_count(opts) == 3);
    CHECK(worker_count({Execution::serial, 8}) == 1);
    std::atomic<bool> ok{true};
    parallel_for(500, opts, [&](std::size_t, int w) {
        if (w < 0 || w >= 3) ok = false;
    });
    CHECK(ok);
}

TEST_CASE("exceptions propagate to the caller") {
    for (Execution exec : {Execution::serial, Execution::parallel}) {
        CHECK_THROWS_AS(parallel_for(200, {exec, 2},
                                     [](std::size_t i, int) {
                                         if (i == 117) fail(ErrorKind::run, "boom");
                                     }),
                        Error);
        CHECK_THROWS_AS(parallel_for(10, {exec, 2},
                                     [](std::size_t i, int) {
                                         if (i == 3) throw std::logic_error("x");
                                     }),
                        std::logic_error);
    }
}
