#pragma once

#include <stdexcept>
#include <string>

namespace scfc {

// Machine-distinguishable failure classes. Tests and the CLI error JSON
// dispatch on the code, humans read the message.
enum class ErrorCode {
    ShapeMismatch,
    NoForwardCache,
    NonFiniteValue,
    BadMagic,
    TruncatedFile,
    CountMismatch,
    IoFailure,
    BadFormat,
    InvalidArgument,
    MissingPath,
    UnlabeledImage,
    UnknownId,
    EmptySet,
    DuplicateId,
};

const char* error_code_name(ErrorCode code);

class ScfcError : public std::runtime_error {
  public:
    ScfcError(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ShapeMismatch: return "shape_mismatch";
        case ErrorCode::NoForwardCache: return "no_forward_cache";
        case ErrorCode::NonFiniteValue: return "non_finite_value";
        case ErrorCode::BadMagic: return "bad_magic";
        case ErrorCode::TruncatedFile: return "truncated_file";
        case ErrorCode::CountMismatch: return "count_mismatch";
        case ErrorCode::IoFailure: return "io_failure";
        case ErrorCode::BadFormat: return "bad_format";
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::MissingPath: return "missing_path";
        case ErrorCode::UnlabeledImage: return "unlabeled_image";
        case ErrorCode::UnknownId: return "unknown_id";
        case ErrorCode::EmptySet: return "empty_set";
        case ErrorCode::DuplicateId: return "duplicate_id";
    }
    return "unknown";
}

}  // namespace scfc
