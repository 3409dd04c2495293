#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gated/raster.hpp"

namespace gated {

inline constexpr double kSpeedOfLightMPerNs = 0.299792458;
inline constexpr int kBitDepth = 10;
inline constexpr float kMaxDn = 1023.0f;

/// Sentinel for pixels without a depth measurement. 0 m is a geometrically
/// meaningful range, so invalid pixels carry NaN instead.
inline float invalid_depth() { return std::numeric_limits<float>::quiet_NaN(); }
inline bool is_valid_depth(float v) { return std::isfinite(v); }

/// Three co-registered gated exposures plus an optional ambient (laser-off)
/// frame. Values are digital numbers; `quantized` marks stacks whose values
/// have been clipped to [0, 1023] and rounded to integers. Pre-quantization
/// float stacks may exceed that range.
struct GatedStack {
  std::array<Raster<float>, 3> slices;
  std::optional<Raster<float>> ambient;
  std::array<double, 3> delays_ns{};
  bool quantized = false;

  int width() const { return slices[0].width(); }
  int height() const { return slices[0].height(); }
};

/// Per-pixel range in meters; invalid pixels hold the NaN sentinel.
struct DepthMap {
  Raster<float> values;
  float min_range_m = 0.0f;
  float max_range_m = std::numeric_limits<float>::infinity();

  int width() const { return values.width(); }
  int height() const { return values.height(); }
};

/// Per-pixel reflectance in [0, 1].
struct AlbedoMap {
  Raster<float> values;

  int width() const { return values.width(); }
  int height() const { return values.height(); }
};

struct LidarSample {
  int col = 0;
  int row = 0;
  float range_m = 0.0f;
};

/// Lidar-style sample set with the pixel frame it projects into.
struct SparseDepth {
  std::vector<LidarSample> samples;
  int frame_width = 0;
  int frame_height = 0;
};

struct ValidationResult {
  bool ok = true;
  Errc code = Errc::kInvalidArgument;
  std::string message;

  explicit operator bool() const { return ok; }
};

/// Checks the GatedStack invariants: equal slice dimensions, DN range for
/// quantized stacks, strictly increasing gate delays. The failure message
/// names the offending field.
ValidationResult validate_stack(const GatedStack& stack);

/// Throwing form of validate_stack, for use as a precondition.
void require_valid_stack(const GatedStack& stack);

/// Pixelwise conjunction. Throws on dimension mismatch.
Mask mask_and(const Mask& a, const Mask& b);

size_t count_true(const Mask& mask);

}  // namespace gated
