// SPDX-License-Identifier: Apache-2.0
//
// Integer-grid multi-tone signals and their exact conversion to and from one
// sampled period.
//
// Coefficient convention: a tone at index k with complex coefficient c
// contributes Im[c exp(i 2 pi k df t)] to the signal, so a real positive c is
// a sine of amplitude c and a negative c is the same sine with a pi phase.

#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

namespace maft {

using Rational = boost::rational<std::int64_t>;
using Complex = std::complex<double>;

/// Parses "1e6", "100000", "30.6e6", "1/3", "2.5" into an exact rational.
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& r);
double to_double(const Rational& r);
Rational rational_gcd(const Rational& a, const Rational& b);

/// Smallest integer >= n whose only prime factors are 2, 3, 5 and 7.
std::int64_t next_smooth_size(std::int64_t n);

class FrequencyGrid {
 public:
  FrequencyGrid(Rational base_spacing, std::int64_t period_samples);

  const Rational& base_spacing() const noexcept { return base_spacing_; }
  std::int64_t period_samples() const noexcept { return period_samples_; }
  Rational sample_rate() const { return base_spacing_ * period_samples_; }

  /// Largest tone index that satisfies Nyquist (2k < period_samples).
  std::int64_t max_tone_index() const noexcept { return (period_samples_ - 1) / 2; }
  bool representable(std::int64_t k) const noexcept {
    return k >= 0 && 2 * k < period_samples_;
  }
  double frequency_hz(std::int64_t k) const;
  double period_seconds() const;

  friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;

 private:
  Rational base_spacing_;
  std::int64_t period_samples_;
};

/// Grid whose spacing is the exact GCD of `frequencies` and whose sample rate
/// is at least 2 * oversample * max(frequencies).
FrequencyGrid gcd_grid(std::span<const Rational> frequencies, int oversample = 4);

/// Grid with a given spacing sized for tones up to `max_index`.
FrequencyGrid grid_for_max_index(Rational base_spacing, std::int64_t max_index,
                                 int oversample = 4);

class MultiToneSignal {
 public:
  using ToneMap = std::map<std::int64_t, Complex>;

  explicit MultiToneSignal(FrequencyGrid grid, double dc = 0.0);
  MultiToneSignal(FrequencyGrid grid, ToneMap tones, double dc = 0.0);

  const FrequencyGrid& grid() const noexcept { return grid_; }
  const ToneMap& tones() const noexcept { return tones_; }
  double dc() const noexcept { return dc_; }
  bool empty() const noexcept { return tones_.empty(); }
  std::size_t size() const noexcept { return tones_.size(); }
  Complex at(std::int64_t k) const;
  std::int64_t max_index() const noexcept {
    return tones_.empty() ? 0 : tones_.rbegin()->first;
  }

  MultiToneSignal scaled(double factor) const;
  /// Sum of two signals on the same grid; mismatched grids are rejected.
  MultiToneSignal plus(const MultiToneSignal& other) const;

 private:
  FrequencyGrid grid_;
  ToneMap tones_;
  double dc_;
};

struct SampledWaveform {
  FrequencyGrid grid;
  std::vector<double> samples;

  SampledWaveform(FrequencyGrid g, std::vector<double> s);
};

void require_same_grid(const FrequencyGrid& a, const FrequencyGrid& b,
                       std::string_view context);

SampledWaveform synthesize(const MultiToneSignal& signal);
/// Every tone advanced by 90 degrees (a sine becomes a cosine). DC is kept.
SampledWaveform synthesize_shifted(const MultiToneSignal& signal);

/// Inverse of synthesize. Tones whose magnitude is at or below
/// `prune_relative` times the largest magnitude are dropped.
MultiToneSignal analyze(const SampledWaveform& waveform, double prune_relative = 1e-13);

/// Evaluates the signal at an arbitrary time in seconds by direct summation.
double evaluate(const MultiToneSignal& signal, double t_seconds);

/// Views for the fidelity tools: magnitudes and phases in the Im[.] convention.
std::vector<double> magnitudes(const MultiToneSignal& signal);

// Serialization. JSON: {"base_spacing_hz":[num,den],"period_samples":P,
// "dc":x,"tones":[[k,re,im],...]} with tones sorted by k. The CSV spectrum
// dump has the header "freq_hz,magnitude,phase_rad".
std::string to_json(const MultiToneSignal& signal);
MultiToneSignal signal_from_json(std::string_view json);
std::string spectrum_csv(const MultiToneSignal& signal);

}  // namespace maft
