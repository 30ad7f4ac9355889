#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace descforge {

enum class ErrorCode {
    ParseError,
    IndexOutOfRange,
    DegenerateFace,
    EmptyMesh,
    SingularC,
    ConvergenceFailure,
    MultiComponent,
    InsufficientSpectrum,
    ConstantDimension,
    UnnormalizedField,
    MissingBackground,
    EmptyMask,
    DegenerateTrajectory,
    RegistrationMismatch,
    ExhaustedSampling,
    EmptySet,
    ShapeMismatch,
    OffObjectPixel,
    InvalidDepth,
    DimensionMismatch,
    NoValidSamples,
    DegeneratePair,
    ParallelAxis,
    NoValidDepth,
    InvalidArgument,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DegenerateFace: return "DegenerateFace";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::SingularC: return "SingularC";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::MultiComponent: return "MultiComponent";
    case ErrorCode::InsufficientSpectrum: return "InsufficientSpectrum";
    case ErrorCode::ConstantDimension: return "ConstantDimension";
    case ErrorCode::UnnormalizedField: return "UnnormalizedField";
    case ErrorCode::MissingBackground: return "MissingBackground";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::DegenerateTrajectory: return "DegenerateTrajectory";
    case ErrorCode::RegistrationMismatch: return "RegistrationMismatch";
    case ErrorCode::ExhaustedSampling: return "ExhaustedSampling";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OffObjectPixel: return "OffObjectPixel";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoValidSamples: return "NoValidSamples";
    case ErrorCode::DegeneratePair: return "DegeneratePair";
    case ErrorCode::ParallelAxis: return "ParallelAxis";
    case ErrorCode::NoValidDepth: return "NoValidDepth";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message)
        , m_code(code)
    {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

} // namespace descforge
