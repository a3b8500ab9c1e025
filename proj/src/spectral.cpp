// SPDX-License-Identifier: Apache-2.0
#include "maft/spectral.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fft.hpp"
#include "maft/error.hpp"

namespace maft {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) {
    fail(ErrorCode::InvalidArgument, "rational value out of range");
  }
  return out;
}

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::InvalidArgument, "cannot parse integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) fail(ErrorCode::InvalidArgument, "empty rational");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto num = parse_int(text.substr(0, slash));
    const auto den = parse_int(text.substr(slash + 1));
    if (den == 0) fail(ErrorCode::InvalidArgument, "zero denominator");
    return Rational(num, den);
  }

  bool negative = false;
  if (text.front() == '+' || text.front() == '-') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  std::int64_t exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    auto exp_text = text.substr(e + 1);
    if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
    exponent = parse_int(exp_text);
    text = text.substr(0, e);
  }
  std::string digits;
  bool seen_dot = false;
  for (char ch : text) {
    if (ch == '.') {
      if (seen_dot) fail(ErrorCode::InvalidArgument, "malformed number");
      seen_dot = true;
    } else if (ch >= '0' && ch <= '9') {
      digits.push_back(ch);
      if (seen_dot) --exponent;
    } else {
      fail(ErrorCode::InvalidArgument, "malformed number '" + std::string(text) + "'");
    }
  }
  if (digits.empty()) fail(ErrorCode::InvalidArgument, "malformed number");
  std::int64_t mantissa = parse_int(digits);
  std::int64_t num = mantissa;
  std::int64_t den = 1;
  for (; exponent > 0; --exponent) num = checked_mul(num, 10);
  for (; exponent < 0; ++exponent) den = checked_mul(den, 10);
  return Rational(negative ? -num : num, den);
}

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

Rational rational_gcd(const Rational& a, const Rational& b) {
  // gcd(p/q, r/s) = gcd(p, r) / lcm(q, s) for reduced fractions.
  const auto num = std::gcd(a.numerator(), b.numerator());
  const auto den = std::lcm(a.denominator(), b.denominator());
  return Rational(num, den);
}

std::int64_t next_smooth_size(std::int64_t n) {
  if (n <= 1) return 1;
  for (std::int64_t m = n;; ++m) {
    std::int64_t r = m;
    for (std::int64_t p : {2, 3, 5, 7}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

// ---------------------------------------------------------------------------

FrequencyGrid::FrequencyGrid(Rational base_spacing, std::int64_t period_samples)
    : base_spacing_(base_spacing), period_samples_(period_samples) {
  require(base_spacing_ > 0, ErrorCode::InvalidArgument, "grid spacing must be positive");
  require(period_samples_ >= 1, ErrorCode::InvalidArgument, "period_samples must be positive");
}

double FrequencyGrid::frequency_hz(std::int64_t k) const {
  return to_double(base_spacing_) * static_cast<double>(k);
}

double FrequencyGrid::period_seconds() const { return 1.0 / to_double(base_spacing_); }

FrequencyGrid grid_for_max_index(Rational base_spacing, std::int64_t max_index, int oversample) {
  require(oversample >= 1, ErrorCode::InvalidArgument, "oversample must be >= 1");
  require(max_index >= 0, ErrorCode::InvalidArgument, "negative tone index");
  const std::int64_t needed = std::max<std::int64_t>(2 * oversample * max_index, 2 * max_index + 1);
  return FrequencyGrid(base_spacing, next_smooth_size(std::max<std::int64_t>(needed, 2)));
}

FrequencyGrid gcd_grid(std::span<const Rational> frequencies, int oversample) {
  require(!frequencies.empty(), ErrorCode::InvalidArgument, "gcd_grid needs at least one frequency");
  Rational g = frequencies.front();
  Rational largest = frequencies.front();
  for (const auto& f : frequencies) {
    require(f > 0, ErrorCode::InvalidArgument, "frequencies must be positive");
    g = rational_gcd(g, f);
    largest = std::max(largest, f);
  }
  const Rational ratio = largest / g;
  return grid_for_max_index(g, ratio.numerator(), oversample);
}

// ---------------------------------------------------------------------------

MultiToneSignal::MultiToneSignal(FrequencyGrid grid, double dc)
    : grid_(std::move(grid)), dc_(dc) {
  require(std::isfinite(dc_), ErrorCode::InvalidArgument, "non-finite DC offset");
}

MultiToneSignal::MultiToneSignal(FrequencyGrid grid, ToneMap tones, double dc)
    : grid_(std::move(grid)), tones_(std::move(tones)), dc_(dc) {
  require(std::isfinite(dc_), ErrorCode::InvalidArgument, "non-finite DC offset");
  for (const auto& [k, c] : tones_) {
    require(k >= 1, ErrorCode::InvalidArgument, "tone indices must be >= 1 (DC is stored separately)");
    require(std::isfinite(c.real()) && std::isfinite(c.imag()), ErrorCode::InvalidArgument,
            "non-finite tone coefficient at index " + std::to_string(k));
    if (!grid_.representable(k)) {
      fail(ErrorCode::Validation, "tone index " + std::to_string(k) + " violates Nyquist for period " +
                                      std::to_string(grid_.period_samples()));
    }
  }
}

Complex MultiToneSignal::at(std::int64_t k) const {
  auto it = tones_.find(k);
  return it == tones_.end() ? Complex{} : it->second;
}

MultiToneSignal MultiToneSignal::scaled(double factor) const {
  ToneMap out;
  for (const auto& [k, c] : tones_) out.emplace_hint(out.end(), k, c * factor);
  return MultiToneSignal(grid_, std::move(out), dc_ * factor);
}

MultiToneSignal MultiToneSignal::plus(const MultiToneSignal& other) const {
  require_same_grid(grid_, other.grid_, "signal addition");
  ToneMap out = tones_;
  for (const auto& [k, c] : other.tones_) out[k] += c;
  return MultiToneSignal(grid_, std::move(out), dc_ + other.dc_);
}

SampledWaveform::SampledWaveform(FrequencyGrid g, std::vector<double> s)
    : grid(std::move(g)), samples(std::move(s)) {
  require(static_cast<std::int64_t>(samples.size()) == grid.period_samples(), ErrorCode::InvalidArgument,
          "waveform length must equal the grid period");
  for (double v : samples) {
    require(std::isfinite(v), ErrorCode::Numerical, "non-finite waveform sample");
  }
}

void require_same_grid(const FrequencyGrid& a, const FrequencyGrid& b, std::string_view context) {
  if (!(a == b)) {
    fail(ErrorCode::Validation, std::string(context) + ": grid mismatch (" + to_string(a.base_spacing()) +
                                    " Hz x " + std::to_string(a.period_samples()) + " vs " +
                                    to_string(b.base_spacing()) + " Hz x " + std::to_string(b.period_samples()) +
                                    ")");
  }
}

namespace {

std::vector<Complex> synthesize_complex(const MultiToneSignal& signal) {
  const auto P = static_cast<std::size_t>(signal.grid().period_samples());
  std::vector<Complex> z(P);
  for (const auto& [k, c] : signal.tones()) z[static_cast<std::size_t>(k)] = c;
  detail::FftPlan::get(P).backward(z);
  return z;
}

}  // namespace

SampledWaveform synthesize(const MultiToneSignal& signal) {
  const auto z = synthesize_complex(signal);
  std::vector<double> out(z.size());
  for (std::size_t m = 0; m < z.size(); ++m) out[m] = signal.dc() + z[m].imag();
  return SampledWaveform(signal.grid(), std::move(out));
}

SampledWaveform synthesize_shifted(const MultiToneSignal& signal) {
  const auto z = synthesize_complex(signal);
  std::vector<double> out(z.size());
  for (std::size_t m = 0; m < z.size(); ++m) out[m] = signal.dc() + z[m].real();
  return SampledWaveform(signal.grid(), std::move(out));
}

MultiToneSignal analyze(const SampledWaveform& waveform, double prune_relative) {
  const auto P = static_cast<std::size_t>(waveform.grid.period_samples());
  std::vector<Complex> Y(waveform.samples.begin(), waveform.samples.end());
  detail::FftPlan::get(P).forward(Y);
  const double scale = 2.0 / static_cast<double>(P);
  const auto kmax = static_cast<std::size_t>(waveform.grid.max_tone_index());
  double largest = 0.0;
  for (std::size_t k = 1; k <= kmax; ++k) largest = std::max(largest, std::abs(Y[k]));
  const double cutoff = largest * scale * prune_relative;
  MultiToneSignal::ToneMap tones;
  for (std::size_t k = 1; k <= kmax; ++k) {
    const Complex c = Complex(0.0, scale) * Y[k];
    if (std::abs(c) > cutoff) tones.emplace_hint(tones.end(), static_cast<std::int64_t>(k), c);
  }
  return MultiToneSignal(waveform.grid, std::move(tones), Y[0].real() / static_cast<double>(P));
}

double evaluate(const MultiToneSignal& signal, double t_seconds) {
  const double w = 2.0 * std::numbers::pi * to_double(signal.grid().base_spacing()) * t_seconds;
  double v = signal.dc();
  for (const auto& [k, c] : signal.tones()) {
    const double phase = w * static_cast<double>(k);
    v += c.real() * std::sin(phase) + c.imag() * std::cos(phase);
  }
  return v;
}

std::vector<double> magnitudes(const MultiToneSignal& signal) {
  std::vector<double> out;
  out.reserve(signal.size());
  for (const auto& [k, c] : signal.tones()) out.push_back(std::abs(c));
  return out;
}

// ---------------------------------------------------------------------------

std::string to_json(const MultiToneSignal& signal) {
  nlohmann::json j;
  const auto& b = signal.grid().base_spacing();
  j["base_spacing_hz"] = {b.numerator(), b.denominator()};
  j["period_samples"] = signal.grid().period_samples();
  j["dc"] = signal.dc();
  auto tones = nlohmann::json::array();
  for (const auto& [k, c] : signal.tones()) tones.push_back({k, c.real(), c.imag()});
  j["tones"] = std::move(tones);
  return j.dump();
}

MultiToneSignal signal_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& b = j.at("base_spacing_hz");
    const Rational base(b.at(0).get<std::int64_t>(), b.at(1).get<std::int64_t>());
    MultiToneSignal::ToneMap tones;
    std::int64_t kmax = 0;
    for (const auto& t : j.at("tones")) {
      const auto k = t.at(0).get<std::int64_t>();
      tones[k] += Complex(t.at(1).get<double>(), t.at(2).get<double>());
      kmax = std::max(kmax, k);
    }
    const auto P = j.contains("period_samples") ? j["period_samples"].get<std::int64_t>()
                                                : grid_for_max_index(base, kmax).period_samples();
    return MultiToneSignal(FrequencyGrid(base, P), std::move(tones), j.value("dc", 0.0));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("signal JSON: ") + e.what());
  }
}

std::string spectrum_csv(const MultiToneSignal& signal) {
  std::ostringstream os;
  os.precision(17);
  os << "freq_hz,magnitude,phase_rad\n";
  if (signal.dc() != 0.0) {
    os << 0.0 << ',' << std::abs(signal.dc()) << ',' << (signal.dc() < 0 ? std::numbers::pi : 0.0) << '\n';
  }
  for (const auto& [k, c] : signal.tones()) {
    os << signal.grid().frequency_hz(k) << ',' << std::abs(c) << ',' << std::arg(c) << '\n';
  }
  return os.str();
}

}  // namespace maft
