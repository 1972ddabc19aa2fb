#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poolcast {

enum class ErrorCode {
    InvalidArgument,
    DensityUnavailable,
    MomentUnavailable,
    LengthMismatch,
    TooFewSamples,
    EmptyInput,
    MedianUndefined,
    DomainViolation,
    WeightConstraintViolation,
    NoConvergence,
    SingularHessian,
    DegenerateDesign,
    InvalidConfig,
    SchemaError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. Input and schema problems are
/// distinguished from numerical failures so the CLI can map them to exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// True for errors caused by malformed input rather than numerics.
    bool is_input_error() const noexcept {
        switch (code_) {
            case ErrorCode::InvalidArgument:
            case ErrorCode::LengthMismatch:
            case ErrorCode::EmptyInput:
            case ErrorCode::InvalidConfig:
            case ErrorCode::SchemaError:
            case ErrorCode::IoError:
            case ErrorCode::WeightConstraintViolation:
                return true;
            default:
                return false;
        }
    }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DensityUnavailable: return "DensityUnavailable";
        case ErrorCode::MomentUnavailable: return "MomentUnavailable";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::MedianUndefined: return "MedianUndefined";
        case ErrorCode::DomainViolation: return "DomainViolation";
        case ErrorCode::WeightConstraintViolation: return "WeightConstraintViolation";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::SingularHessian: return "SingularHessian";
        case ErrorCode::DegenerateDesign: return "DegenerateDesign";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace poolcast
