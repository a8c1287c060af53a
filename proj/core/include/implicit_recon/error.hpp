#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace irecon {

enum class ErrorCode {
    FileNotFound,
    ParseError,
    DegenerateCloud,
    EmptySurface,
    MissingNormals,
    InvalidArgument,
    ShapeMismatch,
    NonFiniteActivation,
    LengthMismatch,
    EmptyBatch,
    TraceMismatch,
    IndexOutOfRange,
    NonFiniteObjective,
    DivergenceDetected,
    EmptyMesh,
    IoError,
    MissingArtifact,
    BadCheckpoint,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Malformed record in a text or binary input file. `line` is 1-based; 0 means
/// the failure is not tied to a particular line (e.g. a truncated binary body).
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& reason)
        : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + reason),
          line_(line), reason_(reason) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

}  // namespace irecon
