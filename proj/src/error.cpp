#include "mbw/error.hpp"

namespace mbw {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DegenerateCritical: return "DegenerateCritical";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::SizeExceeded: return "SizeExceeded";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::OrientationError: return "OrientationError";
    case ErrorCode::WindowOnCriticalValue: return "WindowOnCriticalValue";
    case ErrorCode::UnmatchedEvent: return "UnmatchedEvent";
    case ErrorCode::AmbiguousMatch: return "AmbiguousMatch";
    case ErrorCode::OracleSizeExceeded: return "OracleSizeExceeded";
    case ErrorCode::OracleMismatch: return "OracleMismatch";
    case ErrorCode::ArithmeticOverflow: return "ArithmeticOverflow";
    case ErrorCode::IndexMismatch: return "IndexMismatch";
    case ErrorCode::ZeroHessianEigenvalue: return "ZeroHessianEigenvalue";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::WeightOverflow: return "WeightOverflow";
    case ErrorCode::BoundaryMismatch: return "BoundaryMismatch";
    case ErrorCode::SolverStall: return "SolverStall";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::FloorContamination: return "FloorContamination";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

ErrorClass classify(ErrorCode code)
{
    switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::OrientationError:
    case ErrorCode::WindowOnCriticalValue:
    case ErrorCode::BoundaryMismatch:
    case ErrorCode::ConfigError:
    case ErrorCode::UsageError:
    case ErrorCode::IoError:
    case ErrorCode::SizeExceeded:
    case ErrorCode::OracleSizeExceeded:
        return ErrorClass::Usage;
    default:
        return ErrorClass::Numerical;
    }
}

}  // namespace mbw
