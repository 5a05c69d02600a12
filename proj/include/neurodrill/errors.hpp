#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace neurodrill {

enum class ErrorCode {
    NonPositiveDepth,
    NonPositiveFocal,
    InvalidArgument,
    JointLimitViolation,
    IKDivergence,
    EmptyStream,
    VolumeBehindCamera,
    DegenerateGeometry,
    InsufficientPoints,
    DegenerateCollinear,
    NoHolesFound,
    OutOfBounds,
    PlanarityViolation,
    LowConfidence,
    StaleFeature,
    TrackingTimeout,
    ParseError,
    ValidationError,
    CorruptFile,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::NonPositiveFocal: return "NonPositiveFocal";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::JointLimitViolation: return "JointLimitViolation";
    case ErrorCode::IKDivergence: return "IKDivergence";
    case ErrorCode::EmptyStream: return "EmptyStream";
    case ErrorCode::VolumeBehindCamera: return "VolumeBehindCamera";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::DegenerateCollinear: return "DegenerateCollinear";
    case ErrorCode::NoHolesFound: return "NoHolesFound";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::PlanarityViolation: return "PlanarityViolation";
    case ErrorCode::LowConfidence: return "LowConfidence";
    case ErrorCode::StaleFeature: return "StaleFeature";
    case ErrorCode::TrackingTimeout: return "TrackingTimeout";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace neurodrill
