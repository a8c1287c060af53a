#include "implicit_recon/error.hpp"

namespace irecon {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::EmptySurface: return "EmptySurface";
    case ErrorCode::MissingNormals: return "MissingNormals";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::TraceMismatch: return "TraceMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::BadCheckpoint: return "BadCheckpoint";
    }
    return "Error";
}

}  // namespace irecon
