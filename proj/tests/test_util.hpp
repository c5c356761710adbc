#pragma once

#include <doctest.h>

#include "divgof/error.hpp"

namespace testutil {

// Kind of the divgof::Error thrown by f; fails the test when nothing is thrown.
template <class F>
divgof::ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const divgof::Error& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return divgof::ErrorKind::run;
}

}  // namespace testutil
