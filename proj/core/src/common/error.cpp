#include "vihoi/common/error.hpp"

namespace vihoi {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateRotation: return "DegenerateRotation";
    case ErrorCode::kNotARotation: return "NotARotation";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyMesh: return "EmptyMesh";
    case ErrorCode::kNotWatertight: return "NotWatertight";
    case ErrorCode::kSamplingFailed: return "SamplingFailed";
    case ErrorCode::kBadDims: return "BadDims";
    case ErrorCode::kInfeasibleTask: return "InfeasibleTask";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kTokenizationMismatch: return "TokenizationMismatch";
    case ErrorCode::kBadImageShape: return "BadImageShape";
    case ErrorCode::kLayerMissing: return "LayerMissing";
    case ErrorCode::kDepthTooSmall: return "DepthTooSmall";
    case ErrorCode::kWidthMismatch: return "WidthMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kBadT: return "BadT";
    case ErrorCode::kMissingReferenceImages: return "MissingReferenceImages";
    case ErrorCode::kFrozenViolation: return "FrozenViolation";
    case ErrorCode::kBadCamera: return "BadCamera";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kBadResponseCount: return "BadResponseCount";
    case ErrorCode::kCorpusTooSmall: return "CorpusTooSmall";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::kTooFewPairs: return "TooFewPairs";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kFormat: return "Format";
    case ErrorCode::kConfig: return "Config";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace vihoi
