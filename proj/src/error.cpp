#include "divgof/error.hpp"

namespace divgof {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::domain: return "domain error";
        case ErrorKind::usage: return "usage error";
        case ErrorKind::validation: return "validation error";
        case ErrorKind::ingest: return "ingestion error";
        case ErrorKind::numeric: return "numeric error";
        case ErrorKind::model: return "model error";
        case ErrorKind::rank: return "rank error";
        case ErrorKind::degenerate: return "degenerate-kernel error";
        case ErrorKind::alternative: return "alternative-too-strong error";
        case ErrorKind::convergence: return "convergence error";
        case ErrorKind::run: return "run error";
    }
    return "error";
}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::domain:
        case ErrorKind::usage:
        case ErrorKind::validation:
        case ErrorKind::ingest:
            return 2;
        default:
            return 3;
    }
}

}  // namespace divgof
