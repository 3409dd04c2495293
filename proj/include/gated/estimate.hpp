#pragma once

#include <array>
#include <cstdint>

#include "gated/core.hpp"
#include "gated/profile.hpp"

namespace gated {

inline constexpr double kIlluminationThresholdDn = 55.0;

/// Levenberg-Marquardt controls for the per-pixel (range, albedo) fit.
/// Initialization is a coarse range grid with the closed-form albedo per
/// candidate; LM then refines both parameters jointly.
struct LmOptions {
  double init_grid_step_m = 2.0;
  int max_iterations = 50;
  double damping_init = 1e-3;
  double damping_up = 10.0;
  double damping_down = 0.1;
  double param_tolerance_m = 1e-4;
  double residual_tolerance = 1e-8;
  double albedo_max = 2.0;
};

struct PixelFit {
  double range_m = 0.0;
  double albedo = 0.0;
  double residual = 0.0;  // final squared residual ||z - albedo*C(r)||^2
  int iterations = 0;
  bool converged = false;
};

/// Dense per-pixel fit over a stack. Depth carries the invalid sentinel
/// exactly where `illuminated` is false; albedo is clamped to [0, 1].
struct EstimateResult {
  DepthMap depth;
  AlbedoMap albedo;
  Raster<float> residual;
  Mask illuminated;
  Raster<int32_t> iterations;
};

/// A pixel counts as illuminated when its slice values span at least
/// threshold DN: max(z1,z2,z3) - min(z1,z2,z3) >= threshold. Expects an
/// ambient-subtracted stack.
Mask illumination_mask(const GatedStack& stack,
                       double threshold_dn = kIlluminationThresholdDn);

/// Exact minimizer of ||z - albedo*C(r)||^2 over albedo at fixed range:
/// <z, C(r)> / <C(r), C(r)>, clamped to [0, albedo_max]. Throws if all three
/// profiles vanish at r.
double closed_form_albedo(const std::array<double, 3>& z,
                          const ProfileSet& profiles, double range_m,
                          double albedo_max = 2.0);

/// Grid initialization + damped Gauss-Newton on (range, albedo). Steps are
/// accepted only when they strictly reduce the residual; range stays clamped
/// to the profile domain and albedo to [0, albedo_max]. Never throws on
/// non-convergence; the best iterate is returned with converged = false.
PixelFit estimate_pixel_lm(const std::array<double, 3>& z,
                           const ProfileSet& profiles, const LmOptions& opts);

/// Exhaustive scan over the profile domain at range_step_m with the
/// closed-form albedo per candidate; ties break toward the smaller range.
PixelFit grid_search_oracle(const std::array<double, 3>& z,
                            const ProfileSet& profiles, double range_step_m,
                            double albedo_max = 2.0);

/// Runs estimate_pixel_lm on every pixel (row-parallel), computes the
/// illumination mask, and writes the invalid sentinel at non-illuminated
/// pixels. Output is identical for any thread count.
EstimateResult estimate_depth(const GatedStack& stack,
                              const ProfileSet& profiles,
                              const LmOptions& opts = {}, int threads = 0);

}  // namespace gated
