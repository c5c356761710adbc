#pragma once

#include <stdexcept>
#include <string>

namespace divgof {

enum class ErrorKind {
    domain,
    usage,
    validation,
    ingest,
    numeric,
    model,
    rank,
    degenerate,
    alternative,
    convergence,
    run,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

// CLI exit status: 2 for bad input, 3 for numerical failure.
int exit_code(ErrorKind kind) noexcept;

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace divgof
