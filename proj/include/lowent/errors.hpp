#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lowent {

enum class ErrorCode {
    Length,
    Normalization,
    Domain,
    Infeasible,
    Degenerate,
    Hypothesis,
    Precondition,
    InvariantViolation,
    Numeric,
    Config,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Length: return "length_error";
        case ErrorCode::Normalization: return "normalization_error";
        case ErrorCode::Domain: return "domain_error";
        case ErrorCode::Infeasible: return "infeasibility_error";
        case ErrorCode::Degenerate: return "degenerate_error";
        case ErrorCode::Hypothesis: return "hypothesis_violation";
        case ErrorCode::Precondition: return "precondition_error";
        case ErrorCode::InvariantViolation: return "invariant_violation";
        case ErrorCode::Numeric: return "numeric_error";
        case ErrorCode::Config: return "config_error";
    }
    return "unknown_error";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace detail
}  // namespace lowent
