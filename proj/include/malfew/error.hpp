#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace malfew {

enum class ErrorCode {
  InvalidArgument,
  Io,
  MissingFile,
  ZeroLength,
  EmptyCorpus,
  TooFewFamilies,
  InsufficientAugmentation,
  PositionOutOfRange,
  EmptyBlock,
  EntropyOutOfRange,
  UnsupportedAngle,
  DegenerateStd,
  ShapeMismatch,
  BatchTooSmall,
  NonFinite,
  InsufficientClasses,
  InsufficientSamples,
  CorruptCheckpoint,
  VersionMismatch,
  MismatchedCheckpoint,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace malfew
