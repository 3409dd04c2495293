#pragma once

#include <array>
#include <vector>

#include "gated/core.hpp"

namespace gated {

enum class EnvelopeShape { kRect, kTrapezoid };

/// Laser pulse envelope. Trapezoid ramps linearly over rise_ns at each end
/// of the support [0, duration_ns]; rect is the rise_ns = 0 special case.
struct PulseModel {
  EnvelopeShape shape = EnvelopeShape::kRect;
  double duration_ns = 0.0;
  double rise_ns = 0.0;
  double amplitude = 1.0;
};

/// Sensor gate envelope; the gate opens delay_ns after the pulse leaves.
struct GateModel {
  EnvelopeShape shape = EnvelopeShape::kRect;
  double delay_ns = 0.0;
  double duration_ns = 0.0;
  double rise_ns = 0.0;
};

enum class AttenuationMode { kNone, kInverseSquare, kInverseSquareExtinction };

/// Distance falloff beta(r), normalized so beta(reference_range_m) = 1.
/// inverse_square: (ref/r)^2; extinction adds exp(-2*sigma*(r - ref)).
struct AttenuationModel {
  AttenuationMode mode = AttenuationMode::kNone;
  double sigma_inv_m = 0.0;
  double reference_range_m = 50.0;
};

double attenuation_at(const AttenuationModel& atten, double range_m);

/// Discrete range-intensity measurements on an ascending range grid.
struct ProfileSamples {
  std::vector<double> ranges_m;
  std::vector<double> intensities;
};

/// Range-intensity profile as a Chebyshev series on [domain_min_m,
/// domain_max_m]; coefficients.size() == degree + 1.
struct ChebyshevProfile {
  std::vector<double> coefficients;
  double domain_min_m = 0.0;
  double domain_max_m = 0.0;
};

struct ProfileFit {
  ChebyshevProfile profile;
  double rms_residual = 0.0;
};

/// The three per-slice profiles plus their gate delays; the unit every
/// renderer and estimator consumes.
struct ProfileSet {
  std::array<ChebyshevProfile, 3> profiles;
  std::array<double, 3> delays_ns{};
};

/// Range-intensity synthesis: for each grid range r, the gate/pulse overlap
/// integral beta(r) * int g(t - delay) p(t - 2r/c) dt. Rect/rect pairs take
/// the closed-form interval-overlap path; other shapes integrate with
/// adaptive Simpson (abs tol 1e-9) split at envelope breakpoints.
ProfileSamples synth_profile(const PulseModel& pulse, const GateModel& gate,
                             const AttenuationModel& atten,
                             const std::vector<double>& range_grid_m);

/// Least-squares fit in the Chebyshev basis on the affinely mapped domain.
/// Needs at least degree+1 samples, all inside the domain.
ProfileFit fit_chebyshev(const ProfileSamples& samples, int degree,
                         double domain_min_m, double domain_max_m);

/// Clenshaw evaluation. Out-of-domain ranges throw unless clamp is set,
/// which evaluates at the nearest domain edge.
double eval_profile(const ChebyshevProfile& profile, double range_m,
                    bool clamp = false);

/// Analytic derivative d intensity / d range of the Chebyshev series.
double eval_profile_gradient(const ChebyshevProfile& profile, double range_m,
                             bool clamp = false);

/// [min over slices of domain_min, max over ... ] must agree across the set;
/// throws if the three profiles do not share a common domain.
void require_common_domain(const ProfileSet& set);

/// One slice's hardware: its laser pulse and gate window.
struct SliceConfig {
  PulseModel pulse;
  GateModel gate;
};

/// Full camera description, enough to synthesize and fit a profile set.
struct CameraConfig {
  std::array<SliceConfig, 3> slices;
  AttenuationModel attenuation;
  double domain_min_m = 3.0;
  double domain_max_m = 150.0;
  double grid_step_m = 0.25;
};

/// Stand-in hardware defaults: three overlapping trapezoid slices with
/// ascending delays covering roughly 13-106 m, inverse-square falloff
/// normalized at 50 m. Not a claim about any real sensor.
CameraConfig default_camera();

struct CameraFit {
  ProfileSet profiles;
  std::array<double, 3> fit_rms{};
};

/// Synthesizes each slice on the config's range grid and fits Chebyshev
/// profiles of the given degree over the config domain.
CameraFit fit_camera(const CameraConfig& config, int degree = 6);

}  // namespace gated
