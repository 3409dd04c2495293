#include "gated/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gated/parallel.hpp"

namespace gated {

namespace {

constexpr double kDiagFloor = 1e-12;
constexpr double kDampingMax = 1e12;
constexpr double kDampingMin = 1e-15;

void require_options(const LmOptions& opts) {
  bool ok = opts.init_grid_step_m > 0.0 && opts.max_iterations >= 1 &&
            opts.damping_init > 0.0 && opts.damping_up > 1.0 &&
            opts.damping_down > 0.0 && opts.damping_down < 1.0 &&
            opts.param_tolerance_m > 0.0 && opts.residual_tolerance > 0.0 &&
            opts.albedo_max >= 1.0;
  if (!ok) throw Error(Errc::kInvalidArgument, "invalid LM options");
}

std::array<double, 3> eval3(const ProfileSet& profiles, double r) {
  return {eval_profile(profiles.profiles[0], r),
          eval_profile(profiles.profiles[1], r),
          eval_profile(profiles.profiles[2], r)};
}

double ssr_at(const std::array<double, 3>& z, const std::array<double, 3>& c,
              double alpha) {
  double ssr = 0.0;
  for (int i = 0; i < 3; ++i) {
    double e = z[i] - alpha * c[i];
    ssr += e * e;
  }
  return ssr;
}

// Best albedo at fixed range; a vanishing profile vector pins albedo to 0
// instead of erroring, so grid scans stay total.
double best_alpha(const std::array<double, 3>& z,
                  const std::array<double, 3>& c, double albedo_max) {
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < 3; ++i) {
    num += z[i] * c[i];
    den += c[i] * c[i];
  }
  if (den <= 0.0) return 0.0;
  return std::clamp(num / den, 0.0, albedo_max);
}

// Ascending scan with strict improvement keeps the smallest range on ties.
PixelFit scan_grid(const std::array<double, 3>& z, const ProfileSet& profiles,
                   double step_m, double albedo_max) {
  const double lo = profiles.profiles[0].domain_min_m;
  const double hi = profiles.profiles[0].domain_max_m;

  PixelFit best;
  best.residual = std::numeric_limits<double>::infinity();
  auto consider = [&](double r) {
    std::array<double, 3> c = eval3(profiles, r);
    double alpha = best_alpha(z, c, albedo_max);
    double ssr = ssr_at(z, c, alpha);
    if (ssr < best.residual) {
      best.range_m = r;
      best.albedo = alpha;
      best.residual = ssr;
    }
  };

  double last = lo;
  for (int k = 0;; ++k) {
    double r = lo + k * step_m;
    if (r >= hi) break;
    consider(r);
    last = r;
  }
  if (hi - last > 0.0) consider(hi);
  return best;
}

PixelFit fit_pixel(const std::array<double, 3>& z, const ProfileSet& profiles,
                   const LmOptions& opts) {
  const double lo = profiles.profiles[0].domain_min_m;
  const double hi = profiles.profiles[0].domain_max_m;

  PixelFit fit = scan_grid(z, profiles, opts.init_grid_step_m, opts.albedo_max);
  double r = fit.range_m;
  double alpha = fit.albedo;
  double ssr = fit.residual;
  double lambda = opts.damping_init;
  int iterations = 0;
  bool converged = ssr <= opts.residual_tolerance;

  while (!converged && iterations < opts.max_iterations) {
    ++iterations;
    std::array<double, 3> c = eval3(profiles, r);
    double arr = 0.0, ara = 0.0, aaa = 0.0, gr = 0.0, ga = 0.0;
    for (int i = 0; i < 3; ++i) {
      double slope = eval_profile_gradient(profiles.profiles[i], r);
      double jr = alpha * slope;  // d model / d range
      double ja = c[i];           // d model / d albedo
      double e = z[i] - alpha * c[i];
      arr += jr * jr;
      ara += jr * ja;
      aaa += ja * ja;
      gr += jr * e;
      ga += ja * e;
    }

    double b11 = arr + lambda * std::max(arr, kDiagFloor);
    double b22 = aaa + lambda * std::max(aaa, kDiagFloor);
    double det = b11 * b22 - ara * ara;
    bool accepted = false;
    if (std::isfinite(det) && det > 0.0) {
      double dr = (b22 * gr - ara * ga) / det;
      double da = (b11 * ga - ara * gr) / det;
      double trial_r = std::clamp(r + dr, lo, hi);
      double trial_alpha = std::clamp(alpha + da, 0.0, opts.albedo_max);
      double trial_ssr = ssr_at(z, eval3(profiles, trial_r), trial_alpha);
      if (trial_ssr < ssr) {
        double moved_r = std::abs(trial_r - r);
        double moved_alpha = std::abs(trial_alpha - alpha);
        r = trial_r;
        alpha = trial_alpha;
        ssr = trial_ssr;
        lambda = std::max(lambda * opts.damping_down, kDampingMin);
        accepted = true;
        if ((moved_r < opts.param_tolerance_m &&
             moved_alpha < opts.param_tolerance_m) ||
            ssr <= opts.residual_tolerance) {
          converged = true;
        }
      }
    }
    if (!accepted) {
      lambda *= opts.damping_up;
      if (lambda > kDampingMax) break;
    }
  }

  fit.range_m = r;
  fit.albedo = alpha;
  fit.residual = ssr;
  fit.iterations = iterations;
  fit.converged = converged;
  return fit;
}

}  // namespace

Mask illumination_mask(const GatedStack& stack, double threshold_dn) {
  if (threshold_dn < 0.0) {
    throw Error(Errc::kInvalidArgument, "threshold must be >= 0");
  }
  require_valid_stack(stack);
  const int width = stack.width();
  const int height = stack.height();
  Mask mask(width, height);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      float z0 = stack.slices[0].at(row, col);
      float z1 = stack.slices[1].at(row, col);
      float z2 = stack.slices[2].at(row, col);
      float span = std::max({z0, z1, z2}) - std::min({z0, z1, z2});
      mask.at(row, col) = (span >= threshold_dn) ? 1 : 0;
    }
  }
  return mask;
}

double closed_form_albedo(const std::array<double, 3>& z,
                          const ProfileSet& profiles, double range_m,
                          double albedo_max) {
  require_common_domain(profiles);
  std::array<double, 3> c = eval3(profiles, range_m);
  double den = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
  if (den <= 0.0) {
    throw Error(Errc::kZeroProfileNorm, "all profiles vanish at this range");
  }
  double num = z[0] * c[0] + z[1] * c[1] + z[2] * c[2];
  return std::clamp(num / den, 0.0, albedo_max);
}

PixelFit estimate_pixel_lm(const std::array<double, 3>& z,
                           const ProfileSet& profiles, const LmOptions& opts) {
  require_options(opts);
  require_common_domain(profiles);
  for (double v : z) {
    if (!std::isfinite(v)) {
      throw Error(Errc::kInvalidValue, "measurement is not finite");
    }
  }
  return fit_pixel(z, profiles, opts);
}

PixelFit grid_search_oracle(const std::array<double, 3>& z,
                            const ProfileSet& profiles, double range_step_m,
                            double albedo_max) {
  if (!(range_step_m > 0.0)) {
    throw Error(Errc::kInvalidArgument, "range step must be positive");
  }
  require_common_domain(profiles);
  return scan_grid(z, profiles, range_step_m, albedo_max);
}

EstimateResult estimate_depth(const GatedStack& stack,
                              const ProfileSet& profiles,
                              const LmOptions& opts, int threads) {
  require_options(opts);
  require_valid_stack(stack);
  require_common_domain(profiles);

  const int width = stack.width();
  const int height = stack.height();
  EstimateResult out{
      DepthMap{Raster<float>(width, height)},
      AlbedoMap{Raster<float>(width, height)},
      Raster<float>(width, height),
      illumination_mask(stack),
      Raster<int32_t>(width, height),
  };
  out.depth.min_range_m =
      static_cast<float>(profiles.profiles[0].domain_min_m);
  out.depth.max_range_m =
      static_cast<float>(profiles.profiles[0].domain_max_m);

  parallel_for_rows(height, threads, [&](int row_begin, int row_end) {
    for (int row = row_begin; row < row_end; ++row) {
      for (int col = 0; col < width; ++col) {
        std::array<double, 3> z = {
            double{stack.slices[0].at(row, col)},
            double{stack.slices[1].at(row, col)},
            double{stack.slices[2].at(row, col)},
        };
        PixelFit fit = fit_pixel(z, profiles, opts);
        bool lit = out.illuminated.at(row, col) != 0;
        out.depth.values.at(row, col) =
            lit ? static_cast<float>(fit.range_m) : invalid_depth();
        out.albedo.values.at(row, col) =
            std::clamp(static_cast<float>(fit.albedo), 0.0f, 1.0f);
        out.residual.at(row, col) = static_cast<float>(fit.residual);
        out.iterations.at(row, col) = fit.iterations;
      }
    }
  });
  return out;
}

}  // namespace gated
