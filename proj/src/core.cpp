#include "gated/core.hpp"

#include <cmath>
#include <sstream>

namespace gated {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::kDimensionMismatch: return "dimension_mismatch";
    case Errc::kDnOutOfRange: return "dn_out_of_range";
    case Errc::kNonMonotoneDelays: return "non_monotone_delays";
    case Errc::kEmptyGrid: return "empty_grid";
    case Errc::kNonAscendingGrid: return "non_ascending_grid";
    case Errc::kInsufficientSamples: return "insufficient_samples";
    case Errc::kSamplesOutsideDomain: return "samples_outside_domain";
    case Errc::kOutOfDomain: return "out_of_domain";
    case Errc::kZeroProfileNorm: return "zero_profile_norm";
    case Errc::kMissingAmbientFrame: return "missing_ambient_frame";
    case Errc::kEmptyMask: return "empty_mask";
    case Errc::kInvalidValue: return "invalid_value";
    case Errc::kZeroEvaluatedPoints: return "zero_evaluated_points";
    case Errc::kNonPositiveDepth: return "non_positive_depth";
    case Errc::kMalformedFile: return "malformed_file";
    case Errc::kValueOverflow: return "value_overflow";
    case Errc::kSizeMismatch: return "size_mismatch";
    case Errc::kDuplicateSample: return "duplicate_sample";
    case Errc::kInvalidArgument: return "invalid_argument";
    case Errc::kIoFailure: return "io_failure";
  }
  return "unknown";
}

ValidationResult validate_stack(const GatedStack& stack) {
  auto fail = [](Errc code, const std::string& message) {
    return ValidationResult{false, code, message};
  };

  const Raster<float>& first = stack.slices[0];
  for (int i = 1; i < 3; ++i) {
    if (!stack.slices[i].same_shape(first)) {
      std::ostringstream os;
      os << "slice " << i << " is " << stack.slices[i].width() << "x"
         << stack.slices[i].height() << ", slice 0 is " << first.width() << "x"
         << first.height();
      return fail(Errc::kDimensionMismatch, os.str());
    }
  }
  if (stack.ambient && !stack.ambient->same_shape(first)) {
    return fail(Errc::kDimensionMismatch, "ambient frame shape differs");
  }

  if (!(stack.delays_ns[0] < stack.delays_ns[1] &&
        stack.delays_ns[1] < stack.delays_ns[2])) {
    return fail(Errc::kNonMonotoneDelays,
                "gate delays must be strictly increasing");
  }

  auto check_dn = [&](const Raster<float>& img,
                      const char* what) -> std::optional<ValidationResult> {
    for (int row = 0; row < img.height(); ++row) {
      for (int col = 0; col < img.width(); ++col) {
        float v = img.at(row, col);
        if (!std::isfinite(v)) {
          std::ostringstream os;
          os << what << " has non-finite value at (" << row << "," << col
             << ")";
          return fail(Errc::kInvalidValue, os.str());
        }
        if (stack.quantized) {
          if (v < 0.0f || v > kMaxDn || v != std::floor(v)) {
            std::ostringstream os;
            os << what << " has non-quantized value " << v << " at (" << row
               << "," << col << ")";
            return fail(Errc::kDnOutOfRange, os.str());
          }
        }
      }
    }
    return std::nullopt;
  };

  const char* names[3] = {"slice 0", "slice 1", "slice 2"};
  for (int i = 0; i < 3; ++i) {
    if (auto bad = check_dn(stack.slices[i], names[i])) return *bad;
  }
  if (stack.ambient) {
    if (auto bad = check_dn(*stack.ambient, "ambient")) return *bad;
  }

  return ValidationResult{true, Errc::kInvalidValue, ""};
}

void require_valid_stack(const GatedStack& stack) {
  ValidationResult res = validate_stack(stack);
  if (!res) throw Error(res.code, res.message);
}

Mask mask_and(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) {
    throw Error(Errc::kDimensionMismatch, "mask shapes differ");
  }
  Mask out(a.width(), a.height());
  for (int row = 0; row < a.height(); ++row) {
    for (int col = 0; col < a.width(); ++col) {
      out.at(row, col) = (a.at(row, col) && b.at(row, col)) ? 1 : 0;
    }
  }
  return out;
}

size_t count_true(const Mask& mask) {
  size_t n = 0;
  const uint8_t* p = mask.data();
  const size_t total = mask.size();
  for (size_t i = 0; i < total; ++i) n += (p[i] != 0);
  return n;
}

}  // namespace gated
