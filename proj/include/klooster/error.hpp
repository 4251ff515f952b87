#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace klooster {

enum class ErrorKind {
    CompositeModulus,
    TooLarge,
    DimensionTooLarge,
    DomainError,
    OutOfRange,
    RangeMismatch,
    DegenerateTwist,
    ZeroExponent,
    PreconditionViolation,
    NoFeasibleEll,
    NonpositiveBound,
    ConfigError,
    IoError,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::CompositeModulus: return "CompositeModulus";
        case ErrorKind::TooLarge: return "TooLarge";
        case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::RangeMismatch: return "RangeMismatch";
        case ErrorKind::DegenerateTwist: return "DegenerateTwist";
        case ErrorKind::ZeroExponent: return "ZeroExponent";
        case ErrorKind::PreconditionViolation: return "PreconditionViolation";
        case ErrorKind::NoFeasibleEll: return "NoFeasibleEll";
        case ErrorKind::NonpositiveBound: return "NonpositiveBound";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Limits shared by every table-building routine.
struct Budget {
    std::size_t memory_bytes = std::size_t{1} << 31;
    double enumeration_terms = 1e9;
};

}  // namespace klooster
