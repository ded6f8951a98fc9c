#pragma once

#include <stdexcept>
#include <string>

namespace cvd {

enum class ErrorCode {
  InvalidArgument,
  DegenerateProjection,
  NonPositiveDepth,
  UndefinedDepth,
  NoOverlap,
  EmptyInput,
  NonPositiveScale,
  TooFewFrames,
  SizeMismatch,
  OutOfBounds,
  EmptyMask,
  AllUndefined,
  ShapeMismatch,
  NoAcceptedPairs,
  NonFiniteLoss,
  DegenerateInput,
  NoValidPixels,
  TrackDegenerate,
  EmptyScene,
  MalformedHeader,
  TruncatedData,
  UnsupportedEndianness,
  UnsupportedFormat,
  BadMagic,
  SchemaViolation,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cvd
