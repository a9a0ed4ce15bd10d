#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvaa {

enum class ErrorCode {
    // input / user errors
    InvalidArgument,
    IoFailure,
    UnsupportedFormat,
    CorruptHeader,
    InvalidData,
    MixedDimensions,
    EmptySequence,
    MissingFpsSidecar,
    SchemaMismatch,
    UnsmoothedInput,
    // processing errors
    AudioTooShort,
    EnvelopeTooShort,
    NoBeatsFound,
    TooFewFrames,
    EmptyInput,
    InstanceTooLarge,
    NoUsableAnchors,
    InvalidJob,
    BackendFailed,
    ContractViolation,
    NoBeats,
    DimensionMismatch,
};

std::string_view error_code_name(ErrorCode code);

// True for errors caused by bad user input (files, flags, schemas) as opposed
// to failures while processing valid input.
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace mvaa
