#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vihoi {

// One code per named failure mode of the public operations.
enum class ErrorCode {
  kDegenerateRotation,
  kNotARotation,
  kInvalidArgument,
  kEmptyMesh,
  kNotWatertight,
  kSamplingFailed,
  kBadDims,
  kInfeasibleTask,
  kEmptySplit,
  kTokenizationMismatch,
  kBadImageShape,
  kLayerMissing,
  kDepthTooSmall,
  kWidthMismatch,
  kShapeMismatch,
  kBadT,
  kMissingReferenceImages,
  kFrozenViolation,
  kBadCamera,
  kBackendUnavailable,
  kBadResponseCount,
  kCorpusTooSmall,
  kLengthMismatch,
  kDegenerateCovariance,
  kTooFewPairs,
  kIo,
  kFormat,
  kConfig,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace vihoi
