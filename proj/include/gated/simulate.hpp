#pragma once

#include <cstdint>

#include "gated/core.hpp"
#include "gated/profile.hpp"

namespace gated {

/// Heteroscedastic sensor noise: z = a * Poisson(I / a) + Normal(0, sqrt(b)),
/// so var(z) = a * I + b before clipping. a is DN per photon-equivalent,
/// b the read-noise variance in DN^2.
struct NoiseParams {
  double a = 4.0;
  double b = 25.0;
  uint64_t seed = 0;
};

enum class SceneLayout { kPlane, kStaircase, kBoxes, kRoad };

/// Procedural ground-truth scene description. `steps` only affects the
/// staircase layout; `ambient_dn` is carried along for the render pipeline.
struct SceneSpec {
  SceneLayout layout = SceneLayout::kPlane;
  double near_m = 40.0;
  double far_m = 60.0;
  double albedo_lo = 0.3;
  double albedo_hi = 1.0;
  int width = 256;
  int height = 256;
  uint64_t seed = 0;
  int steps = 4;
  double ambient_dn = 0.0;
};

struct Scene {
  DepthMap depth;
  AlbedoMap albedo;
};

/// Horizontal-line sampling pattern of a rotating scanner: num_lines rows
/// spaced line_spacing apart starting at row 0, every column_stride-th
/// column, each sample independently dropped with probability dropout.
struct LidarPattern {
  int num_lines = 64;
  int line_spacing = 1;
  int column_stride = 1;
  double dropout = 0.0;
  uint64_t seed = 0;
};

/// Renders the three gated slices: slice i = albedo * C_i(range) + ambient.
/// Invalid-depth pixels receive ambient only. With quantize set, values are
/// clipped to [0, 1023] and rounded to integer DN. Depths outside the
/// profile domain throw unless clamp_profiles is set.
GatedStack render_slices(const DepthMap& depth, const AlbedoMap& albedo,
                         const ProfileSet& profiles, double ambient_dn,
                         bool quantize, bool clamp_profiles = false,
                         int threads = 0);

/// Applies the Poisson-Gaussian noise model to an unquantized stack (slices
/// and ambient frame alike), then clips and quantizes. Randomness is
/// addressed by (seed, slice, row, col), so the result is independent of
/// pixel order and thread count.
GatedStack add_noise(const GatedStack& stack, const NoiseParams& params,
                     int threads = 0);

/// Subtracts the ambient frame from each slice (clamping at zero if
/// requested) and drops the ambient frame from the result.
GatedStack subtract_ambient(const GatedStack& stack, bool clamp_at_zero);

/// Deterministic in spec.seed; see SceneLayout for the shapes.
Scene gen_scene(const SceneSpec& spec);

/// Samples the depth map on the lidar pattern; invalid pixels are skipped.
SparseDepth sample_lidar(const DepthMap& depth, const LidarPattern& pattern);

/// clip to [0, 1023], then round; the fixed quantization pipeline.
float quantize_dn(float value);

}  // namespace gated
