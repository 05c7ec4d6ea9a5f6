#include "malfew/error.hpp"

namespace malfew {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::ZeroLength: return "ZeroLength";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::TooFewFamilies: return "TooFewFamilies";
    case ErrorCode::InsufficientAugmentation: return "InsufficientAugmentation";
    case ErrorCode::PositionOutOfRange: return "PositionOutOfRange";
    case ErrorCode::EmptyBlock: return "EmptyBlock";
    case ErrorCode::EntropyOutOfRange: return "EntropyOutOfRange";
    case ErrorCode::UnsupportedAngle: return "UnsupportedAngle";
    case ErrorCode::DegenerateStd: return "DegenerateStd";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InsufficientClasses: return "InsufficientClasses";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::MismatchedCheckpoint: return "MismatchedCheckpoint";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace malfew
