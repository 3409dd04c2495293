#include "gated/profile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "gated/core.hpp"

namespace gated {

namespace {

void require_pulse(const PulseModel& pulse) {
  if (!(pulse.duration_ns > 0.0)) {
    throw Error(Errc::kInvalidArgument, "pulse duration must be positive");
  }
  if (pulse.rise_ns < 0.0 || pulse.rise_ns >= pulse.duration_ns / 2.0) {
    throw Error(Errc::kInvalidArgument,
                "pulse rise time must be in [0, duration/2)");
  }
  if (pulse.shape == EnvelopeShape::kRect && pulse.rise_ns != 0.0) {
    throw Error(Errc::kInvalidArgument, "rect pulse must have zero rise time");
  }
  if (!(pulse.amplitude > 0.0)) {
    throw Error(Errc::kInvalidArgument, "pulse amplitude must be positive");
  }
}

void require_gate(const GateModel& gate) {
  if (gate.delay_ns < 0.0) {
    throw Error(Errc::kInvalidArgument, "gate delay must be non-negative");
  }
  if (!(gate.duration_ns > 0.0)) {
    throw Error(Errc::kInvalidArgument, "gate duration must be positive");
  }
  if (gate.rise_ns < 0.0 || gate.rise_ns >= gate.duration_ns / 2.0) {
    throw Error(Errc::kInvalidArgument,
                "gate rise time must be in [0, duration/2)");
  }
  if (gate.shape == EnvelopeShape::kRect && gate.rise_ns != 0.0) {
    throw Error(Errc::kInvalidArgument, "rect gate must have zero rise time");
  }
}

void require_attenuation(const AttenuationModel& atten) {
  if (atten.sigma_inv_m < 0.0) {
    throw Error(Errc::kInvalidArgument, "extinction sigma must be >= 0");
  }
  if (!(atten.reference_range_m > 0.0)) {
    throw Error(Errc::kInvalidArgument, "reference range must be positive");
  }
}

// Unit-peak envelope value at time t past the leading edge. trapezoid ramps
// over [0, rise] and [duration - rise, duration]; rect is the rise = 0 case.
double envelope_at(EnvelopeShape shape, double duration_ns, double rise_ns,
                   double t) {
  if (t <= 0.0 || t >= duration_ns) return 0.0;
  if (shape == EnvelopeShape::kRect || rise_ns <= 0.0) return 1.0;
  if (t < rise_ns) return t / rise_ns;
  if (t > duration_ns - rise_ns) return (duration_ns - t) / rise_ns;
  return 1.0;
}

double simpson_step(double fa, double fm, double fb, double h) {
  return (fa + 4.0 * fm + fb) * h / 6.0;
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = f(lm);
  double frm = f(rm);
  double left = simpson_step(fa, flm, fm, m - a);
  double right = simpson_step(fm, frm, fb, b - m);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
  double m = 0.5 * (a + b);
  double fa = f(a);
  double fm = f(m);
  double fb = f(b);
  double whole = simpson_step(fa, fm, fb, b - a);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 30);
}

// Breakpoints of a (possibly trapezoid) envelope shifted to start at t0,
// clipped to [lo, hi].
void append_breakpoints(EnvelopeShape shape, double t0, double duration_ns,
                        double rise_ns, double lo, double hi,
                        std::vector<double>* out) {
  double marks[4] = {0.0, rise_ns, duration_ns - rise_ns, duration_ns};
  int count = (shape == EnvelopeShape::kRect || rise_ns <= 0.0) ? 2 : 4;
  if (count == 2) {
    marks[1] = duration_ns;
  }
  for (int i = 0; i < count; ++i) {
    double t = t0 + marks[i];
    if (t > lo && t < hi) out->push_back(t);
  }
}

constexpr double kIntegralAbsTol = 1e-9;

double map_to_unit(const ChebyshevProfile& profile, double r) {
  return (2.0 * r - (profile.domain_min_m + profile.domain_max_m)) /
         (profile.domain_max_m - profile.domain_min_m);
}

void require_profile(const ChebyshevProfile& profile) {
  if (profile.coefficients.empty()) {
    throw Error(Errc::kInvalidArgument, "profile has no coefficients");
  }
  if (!(profile.domain_min_m < profile.domain_max_m)) {
    throw Error(Errc::kInvalidArgument, "profile domain is empty");
  }
}

double domain_check(const ChebyshevProfile& profile, double r, bool clamp) {
  if (r < profile.domain_min_m || r > profile.domain_max_m) {
    if (!clamp) {
      std::ostringstream os;
      os << "range " << r << " m outside profile domain ["
         << profile.domain_min_m << ", " << profile.domain_max_m << "]";
      throw Error(Errc::kOutOfDomain, os.str());
    }
    r = std::clamp(r, profile.domain_min_m, profile.domain_max_m);
  }
  return r;
}

double clenshaw(const std::vector<double>& c, double x) {
  double b1 = 0.0;
  double b2 = 0.0;
  for (size_t k = c.size() - 1; k >= 1; --k) {
    double b0 = c[k] + 2.0 * x * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c[0] + x * b1 - b2;
}

}  // namespace

double attenuation_at(const AttenuationModel& atten, double range_m) {
  require_attenuation(atten);
  if (atten.mode == AttenuationMode::kNone) return 1.0;
  if (!(range_m > 0.0)) {
    throw Error(Errc::kInvalidArgument,
                "attenuation requires a positive range");
  }
  double ratio = atten.reference_range_m / range_m;
  double beta = ratio * ratio;
  if (atten.mode == AttenuationMode::kInverseSquareExtinction) {
    beta *= std::exp(-2.0 * atten.sigma_inv_m *
                     (range_m - atten.reference_range_m));
  }
  return beta;
}

ProfileSamples synth_profile(const PulseModel& pulse, const GateModel& gate,
                             const AttenuationModel& atten,
                             const std::vector<double>& range_grid_m) {
  require_pulse(pulse);
  require_gate(gate);
  require_attenuation(atten);
  if (range_grid_m.empty()) {
    throw Error(Errc::kEmptyGrid, "range grid is empty");
  }
  for (size_t i = 0; i < range_grid_m.size(); ++i) {
    if (range_grid_m[i] < 0.0 || range_grid_m[i] > 300.0) {
      throw Error(Errc::kInvalidArgument, "range grid must lie in [0, 300] m");
    }
    if (i > 0 && !(range_grid_m[i] > range_grid_m[i - 1])) {
      throw Error(Errc::kNonAscendingGrid,
                  "range grid must be strictly ascending");
    }
  }

  bool both_rect = (pulse.shape == EnvelopeShape::kRect ||
                    pulse.rise_ns <= 0.0) &&
                   (gate.shape == EnvelopeShape::kRect || gate.rise_ns <= 0.0);

  ProfileSamples out;
  out.ranges_m = range_grid_m;
  out.intensities.resize(range_grid_m.size());

  for (size_t i = 0; i < range_grid_m.size(); ++i) {
    double r = range_grid_m[i];
    double tau = 2.0 * r / kSpeedOfLightMPerNs;
    double lo = std::max(gate.delay_ns, tau);
    double hi = std::min(gate.delay_ns + gate.duration_ns,
                         tau + pulse.duration_ns);
    double integral = 0.0;
    if (hi > lo) {
      if (both_rect) {
        integral = pulse.amplitude * (hi - lo);
      } else {
        std::vector<double> cuts;
        cuts.push_back(lo);
        cuts.push_back(hi);
        append_breakpoints(gate.shape, gate.delay_ns, gate.duration_ns,
                           gate.rise_ns, lo, hi, &cuts);
        append_breakpoints(pulse.shape, tau, pulse.duration_ns, pulse.rise_ns,
                           lo, hi, &cuts);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        auto f = [&](double t) {
          return envelope_at(gate.shape, gate.duration_ns, gate.rise_ns,
                             t - gate.delay_ns) *
                 pulse.amplitude *
                 envelope_at(pulse.shape, pulse.duration_ns, pulse.rise_ns,
                             t - tau);
        };
        double piece_tol =
            kIntegralAbsTol / static_cast<double>(cuts.size() - 1);
        for (size_t k = 0; k + 1 < cuts.size(); ++k) {
          integral += integrate(f, cuts[k], cuts[k + 1], piece_tol);
        }
      }
    }
    double beta = (r > 0.0 || atten.mode == AttenuationMode::kNone)
                      ? attenuation_at(atten, r)
                      : 0.0;
    // r = 0 with distance attenuation would diverge; the overlap integral is
    // zero there for any physical gate delay, so the product is defined as 0.
    out.intensities[i] = (integral == 0.0) ? 0.0 : beta * integral;
  }
  return out;
}

ProfileFit fit_chebyshev(const ProfileSamples& samples, int degree,
                         double domain_min_m, double domain_max_m) {
  if (degree < 0) {
    throw Error(Errc::kInvalidArgument, "degree must be non-negative");
  }
  if (!(domain_min_m < domain_max_m)) {
    throw Error(Errc::kInvalidArgument, "fit domain is empty");
  }
  if (samples.ranges_m.size() != samples.intensities.size()) {
    throw Error(Errc::kSizeMismatch,
                "sample ranges and intensities differ in length");
  }
  const auto n = static_cast<Eigen::Index>(samples.ranges_m.size());
  const int terms = degree + 1;
  if (n < terms) {
    std::ostringstream os;
    os << "need at least " << terms << " samples for degree " << degree
       << ", got " << n;
    throw Error(Errc::kInsufficientSamples, os.str());
  }
  for (size_t i = 0; i < samples.ranges_m.size(); ++i) {
    double r = samples.ranges_m[i];
    if (r < domain_min_m || r > domain_max_m) {
      throw Error(Errc::kSamplesOutsideDomain,
                  "sample range outside fit domain");
    }
    if (!std::isfinite(samples.intensities[i])) {
      throw Error(Errc::kInvalidValue, "sample intensity is not finite");
    }
  }

  Eigen::MatrixXd design(n, terms);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = (2.0 * samples.ranges_m[i] - (domain_min_m + domain_max_m)) /
               (domain_max_m - domain_min_m);
    design(i, 0) = 1.0;
    if (terms > 1) design(i, 1) = x;
    for (int k = 2; k < terms; ++k) {
      design(i, k) = 2.0 * x * design(i, k - 1) - design(i, k - 2);
    }
    rhs(i) = samples.intensities[i];
  }

  Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);

  ProfileFit fit;
  fit.profile.coefficients.assign(coef.data(), coef.data() + terms);
  fit.profile.domain_min_m = domain_min_m;
  fit.profile.domain_max_m = domain_max_m;
  fit.rms_residual =
      std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(n));
  return fit;
}

double eval_profile(const ChebyshevProfile& profile, double range_m,
                    bool clamp) {
  require_profile(profile);
  double r = domain_check(profile, range_m, clamp);
  return clenshaw(profile.coefficients, map_to_unit(profile, r));
}

double eval_profile_gradient(const ChebyshevProfile& profile, double range_m,
                             bool clamp) {
  require_profile(profile);
  double r = domain_check(profile, range_m, clamp);
  const std::vector<double>& c = profile.coefficients;
  const auto n = c.size() - 1;  // polynomial degree
  if (n == 0) return 0.0;

  // Chebyshev derivative recurrence: d_{k-1} = d_{k+1} + 2k c_k, d_0 halved.
  std::vector<double> d(n + 2, 0.0);
  for (size_t k = n; k >= 1; --k) {
    d[k - 1] = d[k + 1] + 2.0 * static_cast<double>(k) * c[k];
  }
  d[0] *= 0.5;
  d.resize(n);

  double x = map_to_unit(profile, r);
  double dx_dr = 2.0 / (profile.domain_max_m - profile.domain_min_m);
  return clenshaw(d, x) * dx_dr;
}

CameraConfig default_camera() {
  CameraConfig config;
  config.attenuation = {AttenuationMode::kInverseSquare, 0.0, 50.0};
  config.domain_min_m = 3.0;
  config.domain_max_m = 150.0;
  config.grid_step_m = 0.25;

  PulseModel pulse{EnvelopeShape::kTrapezoid, 80.0, 15.0, 1.0};
  const double amplitudes[3] = {6.5, 10.5, 18.0};
  const GateModel gates[3] = {
      {EnvelopeShape::kTrapezoid, 170.0, 260.0, 30.0},
      {EnvelopeShape::kTrapezoid, 310.0, 170.0, 30.0},
      {EnvelopeShape::kTrapezoid, 430.0, 280.0, 30.0},
  };
  for (int i = 0; i < 3; ++i) {
    config.slices[i].pulse = pulse;
    config.slices[i].pulse.amplitude = amplitudes[i];
    config.slices[i].gate = gates[i];
  }
  return config;
}

CameraFit fit_camera(const CameraConfig& config, int degree) {
  if (!(config.domain_min_m < config.domain_max_m) ||
      !(config.grid_step_m > 0.0)) {
    throw Error(Errc::kInvalidArgument, "invalid camera domain or grid step");
  }
  std::vector<double> grid;
  for (double r = config.domain_min_m; r < config.domain_max_m;
       r += config.grid_step_m) {
    grid.push_back(r);
  }
  grid.push_back(config.domain_max_m);

  CameraFit fit;
  for (int i = 0; i < 3; ++i) {
    ProfileSamples samples =
        synth_profile(config.slices[i].pulse, config.slices[i].gate,
                      config.attenuation, grid);
    ProfileFit slice = fit_chebyshev(samples, degree, config.domain_min_m,
                                     config.domain_max_m);
    fit.profiles.profiles[i] = std::move(slice.profile);
    fit.fit_rms[i] = slice.rms_residual;
    fit.profiles.delays_ns[i] = config.slices[i].gate.delay_ns;
  }
  require_common_domain(fit.profiles);
  return fit;
}

void require_common_domain(const ProfileSet& set) {
  const ChebyshevProfile& first = set.profiles[0];
  require_profile(first);
  for (int i = 1; i < 3; ++i) {
    require_profile(set.profiles[i]);
    if (set.profiles[i].domain_min_m != first.domain_min_m ||
        set.profiles[i].domain_max_m != first.domain_max_m) {
      throw Error(Errc::kInvalidArgument,
                  "profiles must share one evaluation domain");
    }
  }
  if (!(set.delays_ns[0] < set.delays_ns[1] &&
        set.delays_ns[1] < set.delays_ns[2])) {
    throw Error(Errc::kNonMonotoneDelays,
                "profile delays must be strictly increasing");
  }
}

}  // namespace gated
