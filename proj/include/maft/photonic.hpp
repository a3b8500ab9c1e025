// SPDX-License-Identifier: Apache-2.0
//
// One hardware layer: modulators, balanced photoelectric multiplication,
// ideal filters and the synchronization delay.
//
// Optical fields are envelopes relative to the laser carrier. An SSB field
// with envelope e_k is E(t) = sum_k e_k exp(i 2 pi k df t); the detector
// output is chi_pd * Im[conj(E_X) E_W]. With this normalization the ideal
// linear pipeline (chi_pd = chi1 = chi2 = 1) returns exactly W X.

#pragma once

#include <cstdint>
#include <map>

#include "maft/encoding.hpp"
#include "maft/spectral.hpp"

namespace maft {

enum class Sideband { SingleUpper, Dual };

struct AnalyticField {
  FrequencyGrid grid;
  Sideband sideband = Sideband::SingleUpper;
  /// Offset index -> complex amplitude. Dual fields hold both +k and -k.
  std::map<std::int64_t, Complex> envelope;
  /// Residual carrier. Booked for completeness; balanced detection removes
  /// its beat with the other field's carrier, and it is never mixed here.
  Complex carrier{};

  explicit AnalyticField(FrequencyGrid g, Sideband s = Sideband::SingleUpper) : grid(std::move(g)), sideband(s) {}
  std::int64_t max_offset() const;
};

struct NonlinearityParams {
  double chi0 = 0.0;
  double chi1 = 1.0;
  double chi2 = 1.0;
  double chi3 = 0.0;
  double chi_pd = 1.0;

  void validate() const;
};

/// Aliasing guard for the sampled sine nonlinearity.
enum class HarmonicGuard { Enforce, Skip };

/// Estimated power of sine-nonlinearity harmonics that fall beyond Nyquist,
/// relative to the power of the modulated tones. Uses the Bessel series of a
/// single tone with the drive's peak phase excursion at its highest index.
double aliased_power_estimate(double drive_peak, std::int64_t max_drive_index, std::int64_t period_samples,
                              double signal_power);

AnalyticField modulate_linear_ssb(const MultiToneSignal& v, const NonlinearityParams& p);
AnalyticField modulate_nonlinear_ssb(const SampledWaveform& v, const NonlinearityParams& p,
                                     HarmonicGuard guard = HarmonicGuard::Enforce);
AnalyticField modulate_linear_dsb(const MultiToneSignal& v, const NonlinearityParams& p);
AnalyticField modulate_nonlinear_dsb(const SampledWaveform& v, const NonlinearityParams& p,
                                     HarmonicGuard guard = HarmonicGuard::Enforce);

/// Exact tone-pair mixing.
MultiToneSignal photoelectric_multiply(const AnalyticField& ex, const AnalyticField& ew, double chi_pd);
/// Same product through sampled fields on the grid.
MultiToneSignal photoelectric_multiply_time(const AnalyticField& ex, const AnalyticField& ew, double chi_pd);

MultiToneSignal apply_filter(const MultiToneSignal& signal, const FilterPolicy& policy);
MultiToneSignal apply_delay(const MultiToneSignal& signal, double tau_seconds);

/// Adds independent Gaussian noise of standard deviation `sigma` to the real
/// and imaginary part of every tone in [1, max_index].
MultiToneSignal add_readout_noise(const MultiToneSignal& signal, double sigma, std::uint64_t seed,
                                  std::int64_t max_index);

}  // namespace maft
