#pragma once

// Shared test fixtures and independent oracles. Everything here deliberately
// avoids the library's own numerics: quadrature instead of adaptive Simpson,
// normal equations instead of the QR fit, monomial Horner instead of
// Clenshaw. Agreement between the two routes is the point of the tests.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gated/profile.hpp"

namespace testutil {

class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    static std::atomic<uint64_t> counter{0};
    uint64_t tag = counter.fetch_add(1);
    path_ = base / ("gated_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(tag));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline double envelope(const gated::EnvelopeShape shape, double duration,
                       double rise, double t) {
  if (t <= 0.0 || t >= duration) return 0.0;
  if (shape == gated::EnvelopeShape::kRect || rise <= 0.0) return 1.0;
  if (t < rise) return t / rise;
  if (t > duration - rise) return (duration - t) / rise;
  return 1.0;
}

/// Midpoint-rule integral of gate(t - delay) * pulse(t - tau) dt, with
/// interval edges pinned to the envelope breakpoints. The integrand is
/// piecewise linear or quadratic between breakpoints, so the midpoint rule is
/// exact on the linear pieces and O(step^2) on ramp-times-ramp pieces; the
/// jumps and kinks themselves contribute no error.
inline double quad_overlap(const gated::PulseModel& pulse,
                           const gated::GateModel& gate, double tau_ns,
                           double step_ns = 0.01) {
  std::vector<double> cuts;
  for (double o : {0.0, gate.rise_ns, gate.duration_ns - gate.rise_ns,
                   gate.duration_ns}) {
    cuts.push_back(gate.delay_ns + o);
  }
  for (double o : {0.0, pulse.rise_ns, pulse.duration_ns - pulse.rise_ns,
                   pulse.duration_ns}) {
    cuts.push_back(tau_ns + o);
  }
  std::sort(cuts.begin(), cuts.end());
  double sum = 0.0;
  for (size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    double a = cuts[seg], b = cuts[seg + 1];
    if (b - a <= 0.0) continue;
    auto n = static_cast<int64_t>(std::ceil((b - a) / step_ns));
    double h = (b - a) / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) {
      double t = a + (static_cast<double>(i) + 0.5) * h;
      sum += h *
             envelope(gate.shape, gate.duration_ns, gate.rise_ns,
                      t - gate.delay_ns) *
             envelope(pulse.shape, pulse.duration_ns, pulse.rise_ns,
                      t - tau_ns);
    }
  }
  return pulse.amplitude * sum;
}

/// Interval-intersection length; the closed form for rect x rect overlap.
inline double rect_overlap(const gated::PulseModel& pulse,
                           const gated::GateModel& gate, double tau_ns) {
  double lo = std::max(gate.delay_ns, tau_ns);
  double hi = std::min(gate.delay_ns + gate.duration_ns,
                       tau_ns + pulse.duration_ns);
  return pulse.amplitude * std::max(0.0, hi - lo);
}

/// Chebyshev T_k(x) by the three-term recurrence, no Clenshaw involved.
inline double cheb_t(int k, double x) {
  double prev = 1.0, cur = x;
  if (k == 0) return prev;
  for (int i = 1; i < k; ++i) {
    double next = 2.0 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Dense least-squares fit in the Chebyshev basis solved through explicit
/// normal equations and Gaussian elimination with partial pivoting.
inline std::vector<double> normal_equations_fit(
    const std::vector<double>& ranges, const std::vector<double>& values,
    int degree, double lo, double hi) {
  int n = degree + 1;
  std::vector<double> ata(static_cast<size_t>(n) * n, 0.0);
  std::vector<double> atb(n, 0.0);
  for (size_t s = 0; s < ranges.size(); ++s) {
    double x = (2.0 * ranges[s] - lo - hi) / (hi - lo);
    std::vector<double> row(n);
    for (int k = 0; k < n; ++k) row[k] = cheb_t(k, x);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) ata[i * n + j] += row[i] * row[j];
      atb[i] += row[i] * values[s];
    }
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::fabs(ata[r * n + col]) > std::fabs(ata[pivot * n + col])) {
        pivot = r;
      }
    }
    for (int j = 0; j < n; ++j) std::swap(ata[col * n + j], ata[pivot * n + j]);
    std::swap(atb[col], atb[pivot]);
    if (ata[col * n + col] == 0.0) {
      throw std::runtime_error("singular normal equations");
    }
    for (int r = col + 1; r < n; ++r) {
      double f = ata[r * n + col] / ata[col * n + col];
      for (int j = col; j < n; ++j) ata[r * n + j] -= f * ata[col * n + j];
      atb[r] -= f * atb[col];
    }
  }
  std::vector<double> coeffs(n);
  for (int r = n - 1; r >= 0; --r) {
    double acc = atb[r];
    for (int j = r + 1; j < n; ++j) acc -= ata[r * n + j] * coeffs[j];
    coeffs[r] = acc / ata[r * n + r];
  }
  return coeffs;
}

/// Expands a Chebyshev series into monomial coefficients of x (the mapped
/// variable), for Horner evaluation independent of Clenshaw.
inline std::vector<double> cheb_to_monomial(const std::vector<double>& c) {
  size_t n = c.size();
  // t[k] holds the monomial coefficients of T_k.
  std::vector<std::vector<double>> t(n);
  if (n > 0) t[0] = {1.0};
  if (n > 1) t[1] = {0.0, 1.0};
  for (size_t k = 2; k < n; ++k) {
    t[k].assign(k + 1, 0.0);
    for (size_t j = 0; j < t[k - 1].size(); ++j) t[k][j + 1] += 2.0 * t[k - 1][j];
    for (size_t j = 0; j < t[k - 2].size(); ++j) t[k][j] -= t[k - 2][j];
  }
  std::vector<double> mono(n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    for (size_t j = 0; j < t[k].size(); ++j) mono[j] += c[k] * t[k][j];
  }
  return mono;
}

inline double horner(const std::vector<double>& mono, double x) {
  double acc = 0.0;
  for (size_t i = mono.size(); i-- > 0;) acc = acc * x + mono[i];
  return acc;
}

inline double eval_monomial_oracle(const gated::ChebyshevProfile& profile,
                                   double range_m) {
  double x = (2.0 * range_m - profile.domain_min_m - profile.domain_max_m) /
             (profile.domain_max_m - profile.domain_min_m);
  return horner(cheb_to_monomial(profile.coefficients), x);
}

/// A profile set with hand-picked smooth polynomial slices on [40, 70] m.
/// Every range in the domain is identifiable: the three curves never share a
/// direction, and the combined gradient stays well away from zero.
inline gated::ProfileSet synthetic_profiles() {
  gated::ProfileSet set;
  // In mapped x on [-1, 1]: falling ramp, centered bump, rising ramp.
  set.profiles[0] = {{400.0, -380.0, 60.0, 0.0, 0.0, 0.0, 0.0}, 40.0, 70.0};
  set.profiles[1] = {{450.0, 0.0, -420.0, 0.0, 30.0, 0.0, 0.0}, 40.0, 70.0};
  set.profiles[2] = {{400.0, 380.0, 60.0, 0.0, 0.0, 0.0, 0.0}, 40.0, 70.0};
  set.delays_ns = {100.0, 200.0, 300.0};
  return set;
}

inline std::mt19937_64 rng(uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace testutil
