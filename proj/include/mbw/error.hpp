#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mbw {

enum class ErrorCode {
    DegenerateCritical,
    NoConvergence,
    NotSymmetric,
    SizeExceeded,
    NonFiniteValue,
    ParseError,
    OrientationError,
    WindowOnCriticalValue,
    UnmatchedEvent,
    AmbiguousMatch,
    OracleSizeExceeded,
    OracleMismatch,
    ArithmeticOverflow,
    IndexMismatch,
    ZeroHessianEigenvalue,
    HypothesisViolated,
    WeightOverflow,
    BoundaryMismatch,
    SolverStall,
    InsufficientData,
    FloorContamination,
    ConfigError,
    UsageError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Coarse error category, mirrored by CLI exit codes and the C API status.
enum class ErrorClass { Usage, Numerical };

ErrorClass classify(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace mbw
