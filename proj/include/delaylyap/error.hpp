#pragma once

#include <stdexcept>
#include <string>

namespace delaylyap {

/// Failure categories surfaced by the library. Each maps to one condition a
/// caller can act on; the CLI turns a subset of them into process exit codes.
enum class ErrorCode {
    NON_SQUARE,                     ///< a coefficient or weight matrix is not n-by-n
    DUPLICATE_DELAY,                ///< two terms share the same delay value
    NO_NONTRIVIAL_DELAYED_MATRIX,   ///< every positive-delay coefficient is zero
    W_NOT_PD,                       ///< weight matrix is not symmetric positive definite
    INCOMPATIBLE_STEP,              ///< no usable grid step divides all delays
    INCOMMENSURATE,                 ///< delays admit no common basic delay
    LYAPUNOV_CONDITION_FAILS,       ///< boundary system singular: no unique Lyapunov matrix
    MEMORY_BUDGET,                  ///< requested block dimension exceeds the configured cap
    SINGULAR,                       ///< linear solve hit a numerically singular matrix
    NUMERIC,                        ///< a numeric precondition failed (NaN, wrong sign, ...)
    NO_CONVERGENCE,                 ///< iterative refinement failed to settle
    UNDECIDED,                      ///< result falls inside the numeric no-decision band
    DOMAIN,                         ///< argument outside the representable domain
    IO,                             ///< malformed input file or schema violation
};

[[nodiscard]] constexpr const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NON_SQUARE: return "NON_SQUARE";
        case ErrorCode::DUPLICATE_DELAY: return "DUPLICATE_DELAY";
        case ErrorCode::NO_NONTRIVIAL_DELAYED_MATRIX: return "NO_NONTRIVIAL_DELAYED_MATRIX";
        case ErrorCode::W_NOT_PD: return "W_NOT_PD";
        case ErrorCode::INCOMPATIBLE_STEP: return "INCOMPATIBLE_STEP";
        case ErrorCode::INCOMMENSURATE: return "INCOMMENSURATE";
        case ErrorCode::LYAPUNOV_CONDITION_FAILS: return "LYAPUNOV_CONDITION_FAILS";
        case ErrorCode::MEMORY_BUDGET: return "MEMORY_BUDGET";
        case ErrorCode::SINGULAR: return "SINGULAR";
        case ErrorCode::NUMERIC: return "NUMERIC";
        case ErrorCode::NO_CONVERGENCE: return "NO_CONVERGENCE";
        case ErrorCode::UNDECIDED: return "UNDECIDED";
        case ErrorCode::DOMAIN: return "DOMAIN";
        case ErrorCode::IO: return "IO";
    }
    return "UNKNOWN";
}

/// Library-wide exception: a code for programmatic handling plus a message
/// with the offending values.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace delaylyap
