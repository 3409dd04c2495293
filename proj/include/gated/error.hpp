#pragma once

#include <stdexcept>
#include <string>

namespace gated {

/// Error codes surfaced by library operations. The CLI maps these onto
/// process exit codes (usage/config errors -> 2, protocol errors -> 3).
enum class Errc {
  kDimensionMismatch,
  kDnOutOfRange,
  kNonMonotoneDelays,
  kEmptyGrid,
  kNonAscendingGrid,
  kInsufficientSamples,
  kSamplesOutsideDomain,
  kOutOfDomain,
  kZeroProfileNorm,
  kMissingAmbientFrame,
  kEmptyMask,
  kInvalidValue,
  kZeroEvaluatedPoints,
  kNonPositiveDepth,
  kMalformedFile,
  kValueOverflow,
  kSizeMismatch,
  kDuplicateSample,
  kInvalidArgument,
  kIoFailure,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace gated
