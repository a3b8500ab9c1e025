// SPDX-License-Identifier: Apache-2.0
#include "maft/photonic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fft.hpp"
#include "maft/error.hpp"

namespace maft {

std::int64_t AnalyticField::max_offset() const {
  std::int64_t m = 0;
  for (const auto& [k, e] : envelope) m = std::max(m, k < 0 ? -k : k);
  return m;
}

void NonlinearityParams::validate() const {
  require(std::isfinite(chi0) && std::isfinite(chi1) && std::isfinite(chi2) && std::isfinite(chi3) &&
              std::isfinite(chi_pd),
          ErrorCode::InvalidArgument, "nonlinearity parameters must be finite");
  require(chi1 > 0.0 && chi2 > 0.0, ErrorCode::InvalidArgument, "chi1 and chi2 must be positive");
}

double aliased_power_estimate(double drive_peak, std::int64_t max_drive_index, std::int64_t period_samples,
                              double signal_power) {
  if (max_drive_index <= 0 || drive_peak == 0.0 || signal_power <= 0.0) return 0.0;
  // Treat the drive as one tone of amplitude beta at the highest index: its
  // n-th harmonic has amplitude 2 |J_n(beta)| and lands at n * kmax.
  const std::int64_t nmax = ((period_samples - 1) / 2) / max_drive_index;
  const double beta = std::abs(drive_peak);
  double power = 0.0;
  for (std::int64_t n = nmax + 1; n <= nmax + 400; ++n) {
    const double j = std::cyl_bessel_j(static_cast<double>(n), beta);
    power += 2.0 * j * j;
    if (static_cast<double>(n) > beta && j * j < 1e-40) break;
  }
  return power / signal_power;
}

namespace {

AnalyticField linear_field(const MultiToneSignal& v, const NonlinearityParams& p, Sideband sb) {
  p.validate();
  AnalyticField f(v.grid(), sb);
  const double g = p.chi1 * p.chi2;
  for (const auto& [k, c] : v.tones()) {
    if (sb == Sideband::SingleUpper) {
      f.envelope.emplace_hint(f.envelope.end(), k, g * c);
    } else {
      f.envelope[k] = 0.5 * g * c;
      f.envelope[-k] = 0.5 * g * std::conj(c);
    }
  }
  f.carrier = p.chi0 + p.chi1 * std::sin(p.chi2 * v.dc() + p.chi3);
  return f;
}

AnalyticField sine_field(const SampledWaveform& v, const NonlinearityParams& p, HarmonicGuard guard, Sideband sb) {
  p.validate();
  std::vector<double> s(v.samples.size());
  double peak = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    s[m] = std::sin(p.chi2 * v.samples[m] + p.chi3);
    peak = std::max(peak, std::abs(v.samples[m]));
  }
  const auto out = analyze(SampledWaveform(v.grid, std::move(s)));
  if (guard == HarmonicGuard::Enforce) {
    const auto drive = analyze(v);
    double power = 0.0;
    for (const auto& [k, c] : out.tones()) power += 0.5 * std::norm(c);
    const double bound = aliased_power_estimate(p.chi2 * peak, drive.max_index(), v.grid.period_samples(), power);
    if (bound >= 1e-6) {
      fail(ErrorCode::Numerical, "sine modulator drive too strong for the grid: aliased power estimate " +
                                     std::to_string(bound) + " (use a larger oversample)");
    }
  }
  AnalyticField f(v.grid, sb);
  for (const auto& [k, c] : out.tones()) {
    if (sb == Sideband::SingleUpper) {
      f.envelope.emplace_hint(f.envelope.end(), k, p.chi1 * c);
    } else {
      f.envelope[k] = 0.5 * p.chi1 * c;
      f.envelope[-k] = 0.5 * p.chi1 * std::conj(c);
    }
  }
  f.carrier = p.chi0 + p.chi1 * out.dc();
  return f;
}

void check_fields(const AnalyticField& ex, const AnalyticField& ew) {
  require_same_grid(ex.grid, ew.grid, "photoelectric multiplication");
}

// Largest |k_w - k_x| over all pairs.
std::int64_t max_difference(const AnalyticField& ex, const AnalyticField& ew) {
  if (ex.envelope.empty() || ew.envelope.empty()) return 0;
  const auto xlo = ex.envelope.begin()->first, xhi = ex.envelope.rbegin()->first;
  const auto wlo = ew.envelope.begin()->first, whi = ew.envelope.rbegin()->first;
  return std::max(std::abs(whi - xlo), std::abs(xhi - wlo));
}

}  // namespace

AnalyticField modulate_linear_ssb(const MultiToneSignal& v, const NonlinearityParams& p) {
  return linear_field(v, p, Sideband::SingleUpper);
}

AnalyticField modulate_linear_dsb(const MultiToneSignal& v, const NonlinearityParams& p) {
  return linear_field(v, p, Sideband::Dual);
}

AnalyticField modulate_nonlinear_ssb(const SampledWaveform& v, const NonlinearityParams& p, HarmonicGuard guard) {
  return sine_field(v, p, guard, Sideband::SingleUpper);
}

AnalyticField modulate_nonlinear_dsb(const SampledWaveform& v, const NonlinearityParams& p, HarmonicGuard guard) {
  return sine_field(v, p, guard, Sideband::Dual);
}

MultiToneSignal photoelectric_multiply(const AnalyticField& ex, const AnalyticField& ew, double chi_pd) {
  check_fields(ex, ew);
  const auto dmax = max_difference(ex, ew);
  if (!ex.grid.representable(dmax)) {
    fail(ErrorCode::Validation, "product tone index " + std::to_string(dmax) + " exceeds the grid Nyquist limit");
  }
  std::vector<Complex> acc(static_cast<std::size_t>(dmax + 1));
  double dc = 0.0;
  for (const auto& [kx, cx] : ex.envelope) {
    const Complex a = chi_pd * std::conj(cx);
    for (const auto& [kw, cw] : ew.envelope) {
      const Complex z = a * cw;
      const auto d = kw - kx;
      if (d > 0) {
        acc[static_cast<std::size_t>(d)] += z;
      } else if (d < 0) {
        // Im[z e^{-i w t}] = Im[-conj(z) e^{+i w t}]
        acc[static_cast<std::size_t>(-d)] -= std::conj(z);
      } else {
        dc += z.imag();
      }
    }
  }
  MultiToneSignal::ToneMap tones;
  for (std::size_t k = 1; k < acc.size(); ++k) {
    if (acc[k] != Complex{}) tones.emplace_hint(tones.end(), static_cast<std::int64_t>(k), acc[k]);
  }
  return MultiToneSignal(ex.grid, std::move(tones), dc);
}

MultiToneSignal photoelectric_multiply_time(const AnalyticField& ex, const AnalyticField& ew, double chi_pd) {
  check_fields(ex, ew);
  const auto P = ex.grid.period_samples();
  const auto dmax = max_difference(ex, ew);
  if (!ex.grid.representable(dmax) || !ex.grid.representable(ex.max_offset()) ||
      !ex.grid.representable(ew.max_offset())) {
    fail(ErrorCode::Validation, "product tone index " + std::to_string(dmax) + " exceeds the grid Nyquist limit");
  }
  const auto& plan = detail::FftPlan::get(static_cast<std::size_t>(P));
  auto sampled = [&](const AnalyticField& f) {
    std::vector<Complex> z(static_cast<std::size_t>(P));
    for (const auto& [k, e] : f.envelope) z[static_cast<std::size_t>(k < 0 ? k + P : k)] += e;
    plan.backward(z);
    return z;
  };
  const auto fx = sampled(ex);
  const auto fw = sampled(ew);
  std::vector<double> y(static_cast<std::size_t>(P));
  for (std::size_t m = 0; m < y.size(); ++m) y[m] = chi_pd * (std::conj(fx[m]) * fw[m]).imag();
  return analyze(SampledWaveform(ex.grid, std::move(y)));
}

MultiToneSignal apply_filter(const MultiToneSignal& signal, const FilterPolicy& policy) {
  if (policy.kind == FilterPolicy::Kind::KeepSpurious) return signal;
  MultiToneSignal::ToneMap tones;
  for (const auto& [k, c] : signal.tones()) {
    const double h = policy.response(k);
    if (h != 0.0) tones.emplace_hint(tones.end(), k, h * c);
  }
  return MultiToneSignal(signal.grid(), std::move(tones), signal.dc() * policy.response(0));
}

MultiToneSignal apply_delay(const MultiToneSignal& signal, double tau) {
  require(std::isfinite(tau), ErrorCode::InvalidArgument, "delay must be finite");
  if (tau == 0.0) return signal;
  const double w = 2.0 * std::numbers::pi * to_double(signal.grid().base_spacing()) * tau;
  MultiToneSignal::ToneMap tones;
  for (const auto& [k, c] : signal.tones()) {
    tones.emplace_hint(tones.end(), k, c * std::polar(1.0, -w * static_cast<double>(k)));
  }
  return MultiToneSignal(signal.grid(), std::move(tones), signal.dc());
}

MultiToneSignal add_readout_noise(const MultiToneSignal& signal, double sigma, std::uint64_t seed,
                                  std::int64_t max_index) {
  require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument, "noise sigma must be >= 0");
  require(signal.grid().representable(max_index), ErrorCode::InvalidArgument, "noise band exceeds the grid");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, sigma);
  MultiToneSignal::ToneMap tones = signal.tones();
  for (std::int64_t k = 1; k <= max_index; ++k) {
    const double re = nd(rng);
    const double im = nd(rng);
    tones[k] += Complex(re, im);
  }
  return MultiToneSignal(signal.grid(), std::move(tones), signal.dc());
}

}  // namespace maft
