#include "mvaa/error.h"

namespace mvaa {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::MixedDimensions: return "MixedDimensions";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::MissingFpsSidecar: return "MissingFpsSidecar";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::UnsmoothedInput: return "UnsmoothedInput";
    case ErrorCode::AudioTooShort: return "AudioTooShort";
    case ErrorCode::EnvelopeTooShort: return "EnvelopeTooShort";
    case ErrorCode::NoBeatsFound: return "NoBeatsFound";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::NoUsableAnchors: return "NoUsableAnchors";
    case ErrorCode::InvalidJob: return "InvalidJob";
    case ErrorCode::BackendFailed: return "BackendFailed";
    case ErrorCode::ContractViolation: return "ContractViolation";
    case ErrorCode::NoBeats: return "NoBeats";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    }
    return "Unknown";
}

bool is_input_error(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::IoFailure:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::CorruptHeader:
    case ErrorCode::InvalidData:
    case ErrorCode::MixedDimensions:
    case ErrorCode::EmptySequence:
    case ErrorCode::MissingFpsSidecar:
    case ErrorCode::SchemaMismatch:
    case ErrorCode::UnsmoothedInput:
        return true;
    default:
        return false;
    }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

}  // namespace mvaa
