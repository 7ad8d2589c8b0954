// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace localv {

enum class ErrorCode {
    EmptyDocument,
    SegmentationFailed,
    NonFiniteScore,
    ProviderUnavailable,
    ReplayMismatch,
    CapabilityMissing,
    PlanParseError,
    FragmentExtractionError,
    GenerationFailed,
    MergeCoverageError,
    MergeUnresolved,
    ParseError,
    UnknownSignal,
    EditOutOfRange,
    InvalidAction,
    ToolUnavailable,
    SimTimeout,
    InvalidK,
    EmptySuite,
    IoError,
    ConfigError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::EmptyDocument: return "EmptyDocument";
        case ErrorCode::SegmentationFailed: return "SegmentationFailed";
        case ErrorCode::NonFiniteScore: return "NonFiniteScore";
        case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
        case ErrorCode::ReplayMismatch: return "ReplayMismatch";
        case ErrorCode::CapabilityMissing: return "CapabilityMissing";
        case ErrorCode::PlanParseError: return "PlanParseError";
        case ErrorCode::FragmentExtractionError: return "FragmentExtractionError";
        case ErrorCode::GenerationFailed: return "GenerationFailed";
        case ErrorCode::MergeCoverageError: return "MergeCoverageError";
        case ErrorCode::MergeUnresolved: return "MergeUnresolved";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnknownSignal: return "UnknownSignal";
        case ErrorCode::EditOutOfRange: return "EditOutOfRange";
        case ErrorCode::InvalidAction: return "InvalidAction";
        case ErrorCode::ToolUnavailable: return "ToolUnavailable";
        case ErrorCode::SimTimeout: return "SimTimeout";
        case ErrorCode::InvalidK: return "InvalidK";
        case ErrorCode::EmptySuite: return "EmptySuite";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Exception carrying a stable error code alongside the human-readable message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace localv
