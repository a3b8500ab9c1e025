// SPDX-License-Identifier: Apache-2.0
#include "maft/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "json_util.hpp"
#include "maft/error.hpp"

namespace maft {

std::vector<std::int64_t> plan_outputs(const LayerPlan& plan) {
  if (plan.weight_indices.empty()) {
    std::vector<std::int64_t> out;
    for (std::int64_t r = 1; r <= plan.n_outputs; ++r) out.push_back(plan.output_index(r));
    return out;
  }
  return enumerate_products(plan).row_output;
}

void validate_network(const NetworkSpec& spec) {
  require(!spec.layers.empty(), ErrorCode::InvalidArgument, "network has no layers");
  require(spec.oversample >= 1, ErrorCode::InvalidArgument, "oversample must be >= 1");
  const auto& base = spec.layers.front().plan.base_spacing;
  for (std::size_t j = 0; j < spec.layers.size(); ++j) {
    const auto& L = spec.layers[j];
    const std::string where = "layer " + std::to_string(j + 1) + ": ";
    validate_plan(L.plan);
    L.activation.validate();
    require(L.weights.rows == L.plan.n_outputs && L.weights.cols == L.plan.n_inputs, ErrorCode::InvalidArgument,
            where + "weight matrix shape does not match the plan");
    require(std::isfinite(L.amplifier_gain), ErrorCode::InvalidArgument, where + "amplifier gain must be finite");
    if (L.plan.base_spacing != base) fail(ErrorCode::Validation, where + "grid spacing differs from layer 1");
    if (j == 0) continue;
    const auto prev = plan_outputs(spec.layers[j - 1].plan);
    if (static_cast<std::int64_t>(prev.size()) != L.plan.n_inputs) {
      fail(ErrorCode::Validation, where + "expects " + std::to_string(L.plan.n_inputs) + " inputs but layer " +
                                      std::to_string(j) + " produces " + std::to_string(prev.size()));
    }
    for (std::int64_t n = 1; n <= L.plan.n_inputs; ++n) {
      if (prev[static_cast<std::size_t>(n - 1)] != L.plan.input_index(n)) {
        fail(ErrorCode::Validation, where + "input tone " + std::to_string(n) + " sits at index " +
                                        std::to_string(L.plan.input_index(n)) + " but the previous output is at " +
                                        std::to_string(prev[static_cast<std::size_t>(n - 1)]));
      }
    }
  }
  const auto& r = spec.readout;
  if (r.mode == ReadoutConfig::Mode::RandomBand) {
    require(r.width >= 0 && r.band_lo >= 0, ErrorCode::InvalidArgument, "random band needs non-negative lo and width");
  }
  for (auto k : plan_outputs(spec.layers.back().plan)) {
    if (r.mode == ReadoutConfig::Mode::OutputBand && k < 0) {
      fail(ErrorCode::Validation, "final layer has rows without a common output tone; use a random band readout");
    }
  }
}

FrequencyGrid network_grid(const NetworkSpec& spec) {
  require(!spec.layers.empty(), ErrorCode::InvalidArgument, "network has no layers");
  std::int64_t kmax = 1;
  for (const auto& L : spec.layers) {
    kmax = std::max({kmax, L.plan.max_weight_index(), L.plan.max_input_index()});
    if (L.mode == ModulationMode::DSB) kmax = std::max(kmax, L.plan.max_weight_index() + L.plan.max_input_index());
  }
  return grid_for_max_index(spec.layers.front().plan.base_spacing, kmax, spec.oversample);
}

std::vector<std::int64_t> readout_indices(const NetworkSpec& spec) {
  const auto& last = spec.layers.back().plan;
  const auto& r = spec.readout;
  if (r.mode == ReadoutConfig::Mode::OutputBand) return plan_outputs(last);
  const std::int64_t width = r.width > 0 ? r.width : last.n_outputs;
  const std::int64_t step = last.output_spacing;
  std::vector<std::int64_t> idx;
  if (r.band_lo > 0) {
    for (std::int64_t i = 0; i < width; ++i) idx.push_back(r.band_lo + i * step);
  } else {
    // A run of consecutive tones of the final layer's spurious spectrum.
    auto spur = enumerate_products(last).spurious_set;
    spur.erase(std::remove(spur.begin(), spur.end(), std::int64_t{0}), spur.end());
    const auto count = static_cast<std::int64_t>(spur.size());
    if (count < width) {
      fail(ErrorCode::Validation, "final layer has " + std::to_string(count) + " spurious tones, fewer than the " +
                                      std::to_string(width) + " requested for the random band");
    }
    std::mt19937_64 rng(r.seed);
    const auto start = std::uniform_int_distribution<std::int64_t>(0, count - width)(rng);
    idx.assign(spur.begin() + start, spur.begin() + start + width);
  }
  const auto g = network_grid(spec);
  if (!g.representable(idx.back())) fail(ErrorCode::InvalidArgument, "readout band lies outside the signal grid");
  return idx;
}

namespace {

AnalyticField input_field(const MultiToneSignal& v, const Layer& L, HarmonicGuard guard) {
  const bool ssb = L.mode == ModulationMode::SSB;
  if (L.transfer == Transfer::Linear) {
    return ssb ? modulate_linear_ssb(v, L.activation) : modulate_linear_dsb(v, L.activation);
  }
  const auto w = synthesize(v);
  return ssb ? modulate_nonlinear_ssb(w, L.activation, guard) : modulate_nonlinear_dsb(w, L.activation, guard);
}

void record(const ForwardOptions& o, std::string stage, const MultiToneSignal& s) {
  if (o.trace) o.trace->push_back({std::move(stage), s});
}

MultiToneSignal envelope_signal(const AnalyticField& f) {
  MultiToneSignal::ToneMap t;
  for (const auto& [k, e] : f.envelope) {
    if (k > 0) t.emplace_hint(t.end(), k, e);
  }
  return MultiToneSignal(f.grid, std::move(t), f.carrier.real());
}

}  // namespace

MultiToneSignal forward_layer(const MultiToneSignal& input, const Layer& L, HarmonicGuard guard,
                              const ForwardOptions& options) {
  const auto& g = input.grid();
  require(g.base_spacing() == L.plan.base_spacing, ErrorCode::Validation, "input grid does not match the layer plan");
  const auto ex = input_field(input, L, guard);
  const auto ew = modulate_linear_ssb(weight_frequencies(L.plan, L.weights, g), L.activation);
  const double chi_pd = L.activation.chi_pd;

  bool use_time = options.path == MultiplyPath::Time;
  if (options.path == MultiplyPath::Auto) {
    use_time = static_cast<double>(ex.envelope.size()) * static_cast<double>(ew.envelope.size()) >
               4.0 * static_cast<double>(g.period_samples());
  }
  auto y = use_time ? photoelectric_multiply_time(ex, ew, chi_pd) : photoelectric_multiply(ex, ew, chi_pd);
  if (options.trace) {
    record(options, "input_field", envelope_signal(ex));
    record(options, "weight_field", envelope_signal(ew));
    record(options, "photovoltage", y);
  }
  y = apply_filter(y, L.plan.filter);
  y = apply_delay(y, L.plan.sync_delay);
  y = y.scaled(L.amplifier_gain);
  record(options, "output", y);
  return y;
}

MultiToneSignal network_output(const std::vector<double>& x, const NetworkSpec& spec, const ForwardOptions& options) {
  validate_network(spec);
  const auto g = network_grid(spec);
  auto v = encode_input(spec.layers.front().plan, x, g);
  for (std::size_t j = 0; j < spec.layers.size(); ++j) {
    if (options.trace) options.trace->push_back({"layer" + std::to_string(j + 1) + "/drive", v});
    const auto before = options.trace ? options.trace->size() : 0;
    v = forward_layer(v, spec.layers[j], spec.guard, options);
    if (options.trace) {
      for (auto i = before; i < options.trace->size(); ++i) {
        (*options.trace)[i].stage = "layer" + std::to_string(j + 1) + "/" + (*options.trace)[i].stage;
      }
    }
  }
  return v;
}

ReadoutResult readout_values(const std::vector<std::int64_t>& indices, const std::vector<Complex>& z,
                             bool sign_recovery) {
  require(indices.size() == z.size(), ErrorCode::InvalidArgument, "readout index/value count mismatch");
  ReadoutResult r;
  r.indices = indices;
  double best = -1.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double mag = std::abs(z[i]);
    const double ph = mag == 0.0 ? 0.0 : std::arg(z[i]);
    const bool positive = std::abs(ph) <= std::numbers::pi / 2;
    r.magnitudes.push_back(mag);
    r.phases.push_back(ph);
    r.ambiguous.push_back(mag != 0.0 && std::abs(std::abs(ph) - std::numbers::pi / 2) < 1e-6);
    r.values.push_back(sign_recovery ? (positive ? mag : -mag) : mag);
    if (mag > best) {
      best = mag;
      r.argmax_class = static_cast<std::int64_t>(i);
    }
  }
  return r;
}

ReadoutResult readout(const MultiToneSignal& signal, const std::vector<std::int64_t>& indices, bool sign_recovery) {
  std::vector<Complex> z;
  for (auto k : indices) {
    if (!signal.grid().representable(k) || k < 1) {
      fail(ErrorCode::InvalidArgument, "readout index " + std::to_string(k) + " is outside the signal grid");
    }
    z.push_back(signal.at(k));
  }
  return readout_values(indices, z, sign_recovery);
}

ReadoutResult forward_network(const std::vector<double>& x, const NetworkSpec& spec, const ForwardOptions& options) {
  const auto y = network_output(x, spec, options);
  return readout(y, readout_indices(spec), spec.readout.sign_recovery);
}

TimeMultiplexResult time_multiplex(const std::vector<std::vector<double>>& inputs, const NetworkSpec& spec,
                                   const ForwardOptions& options) {
  require(!inputs.empty(), ErrorCode::InvalidArgument, "time multiplexing needs at least one input");
  TimeMultiplexResult out;
  auto idx = readout_indices(spec);
  std::sort(idx.begin(), idx.end());
  std::int64_t unit = idx.front();
  for (std::size_t i = 1; i < idx.size(); ++i) {
    if (idx[i] != idx[i - 1]) unit = std::min(unit, idx[i] - idx[i - 1]);
  }
  const double base = to_double(spec.layers.front().plan.base_spacing);
  out.period_seconds = 1.0 / (base * static_cast<double>(unit));
  out.total_seconds = out.period_seconds * static_cast<double>(inputs.size());
  // Every period carries an independent copy of the same weight signal, so
  // each period is exactly one single-input pass.
  for (const auto& x : inputs) out.results.push_back(forward_network(x, spec, options));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using detail::json;

const char* mode_name(ModulationMode m) { return m == ModulationMode::SSB ? "ssb" : "dsb"; }
const char* transfer_name(Transfer t) { return t == Transfer::Linear ? "linear" : "sine"; }

json layer_json(const Layer& L) {
  json j;
  j["plan"] = detail::plan_json(L.plan);
  json rows = json::array();
  for (std::int64_t r = 0; r < L.weights.rows; ++r) {
    json row = json::array();
    for (std::int64_t c = 0; c < L.weights.cols; ++c) row.push_back(L.weights(r, c));
    rows.push_back(std::move(row));
  }
  j["weights"] = std::move(rows);
  const auto& a = L.activation;
  j["activation"] = {{"chi0", a.chi0}, {"chi1", a.chi1}, {"chi2", a.chi2}, {"chi3", a.chi3}, {"chi_pd", a.chi_pd}};
  j["mode"] = mode_name(L.mode);
  j["transfer"] = transfer_name(L.transfer);
  j["amplifier_gain"] = L.amplifier_gain;
  return j;
}

Layer layer_from(const json& j, std::size_t position) {
  Layer L;
  L.plan = detail::plan_from(j.at("plan"));
  const auto& w = j.at("weights");
  const auto rows = static_cast<std::int64_t>(w.size());
  const auto cols = rows == 0 ? 0 : static_cast<std::int64_t>(w.at(0).size());
  L.weights = Matrix(rows, cols);
  for (std::int64_t r = 0; r < rows; ++r) {
    require(static_cast<std::int64_t>(w.at(static_cast<std::size_t>(r)).size()) == cols, ErrorCode::InvalidArgument,
            "ragged weight matrix");
    for (std::int64_t c = 0; c < cols; ++c) {
      L.weights(r, c) = w.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  if (j.contains("activation")) {
    const auto& a = j["activation"];
    L.activation.chi0 = a.value("chi0", 0.0);
    L.activation.chi1 = a.value("chi1", 1.0);
    L.activation.chi2 = a.value("chi2", 1.0);
    L.activation.chi3 = a.value("chi3", 0.0);
    L.activation.chi_pd = a.value("chi_pd", 1.0);
  }
  const auto mode = j.value("mode", std::string("ssb"));
  require(mode == "ssb" || mode == "dsb", ErrorCode::InvalidArgument, "mode must be ssb or dsb");
  L.mode = mode == "ssb" ? ModulationMode::SSB : ModulationMode::DSB;
  const auto transfer = j.value("transfer", std::string(position == 0 ? "linear" : "sine"));
  require(transfer == "linear" || transfer == "sine", ErrorCode::InvalidArgument, "transfer must be linear or sine");
  L.transfer = transfer == "linear" ? Transfer::Linear : Transfer::Sine;
  L.amplifier_gain = j.value("amplifier_gain", 1.0);
  return L;
}

}  // namespace

std::string network_to_json(const NetworkSpec& spec) {
  json j;
  j["oversample"] = spec.oversample;
  j["harmonic_guard"] = spec.guard == HarmonicGuard::Enforce ? "enforce" : "skip";
  const auto& r = spec.readout;
  j["readout"] = {{"mode", r.mode == ReadoutConfig::Mode::OutputBand ? "output_band" : "random_band"},
                  {"seed", r.seed},
                  {"band_lo", r.band_lo},
                  {"width", r.width},
                  {"sign_recovery", r.sign_recovery}};
  json layers = json::array();
  for (const auto& L : spec.layers) layers.push_back(layer_json(L));
  j["layers"] = std::move(layers);
  return j.dump(1);
}

NetworkSpec network_from_json(std::string_view text) {
  return detail::guarded_parse("network JSON", [&] {
    const auto j = json::parse(text);
    NetworkSpec spec;
    spec.oversample = j.value("oversample", 4);
    const auto guard = j.value("harmonic_guard", std::string("enforce"));
    require(guard == "enforce" || guard == "skip", ErrorCode::InvalidArgument, "harmonic_guard must be enforce or skip");
    spec.guard = guard == "enforce" ? HarmonicGuard::Enforce : HarmonicGuard::Skip;
    if (j.contains("readout")) {
      const auto& r = j["readout"];
      const auto mode = r.value("mode", std::string("output_band"));
      require(mode == "output_band" || mode == "random_band", ErrorCode::InvalidArgument,
              "readout mode must be output_band or random_band");
      spec.readout.mode = mode == "output_band" ? ReadoutConfig::Mode::OutputBand : ReadoutConfig::Mode::RandomBand;
      spec.readout.seed = r.value("seed", std::uint64_t{0});
      spec.readout.band_lo = r.value("band_lo", std::int64_t{0});
      spec.readout.width = r.value("width", std::int64_t{0});
      spec.readout.sign_recovery = r.value("sign_recovery", false);
    }
    const auto& layers = j.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) spec.layers.push_back(layer_from(layers[i], i));
    validate_network(spec);
    return spec;
  });
}

std::string readout_to_json(const ReadoutResult& r) {
  json j;
  j["indices"] = r.indices;
  j["values"] = r.values;
  j["magnitudes"] = r.magnitudes;
  j["phases"] = r.phases;
  j["ambiguous"] = r.ambiguous;
  j["argmax"] = r.argmax_class;
  return j.dump();
}

std::string trace_csv(const std::vector<StageSpectrum>& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "stage,freq_hz,magnitude,phase_rad\n";
  for (const auto& [stage, s] : trace) {
    if (s.dc() != 0.0) os << stage << ",0," << std::abs(s.dc()) << ',' << (s.dc() < 0 ? std::numbers::pi : 0.0) << '\n';
    for (const auto& [k, c] : s.tones()) {
      os << stage << ',' << s.grid().frequency_hz(k) << ',' << std::abs(c) << ',' << std::arg(c) << '\n';
    }
  }
  return os.str();
}

}  // namespace maft
