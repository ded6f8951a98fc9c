#include "cvd/error.hpp"

namespace cvd {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::UndefinedDepth: return "UndefinedDepth";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::AllUndefined: return "AllUndefined";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoAcceptedPairs: return "NoAcceptedPairs";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NoValidPixels: return "NoValidPixels";
    case ErrorCode::TrackDegenerate: return "TrackDegenerate";
    case ErrorCode::EmptyScene: return "EmptyScene";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::UnsupportedEndianness: return "UnsupportedEndianness";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace cvd
