// SPDX-License-Identifier: Apache-2.0
//
// Multi-layer forward model: each layer encodes its weights, modulates the
// incoming photovoltage (linearly or through the sine transfer), multiplies
// in the detector, filters, delays and amplifies.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maft/encoding.hpp"
#include "maft/photonic.hpp"
#include "maft/spectral.hpp"

namespace maft {

enum class ModulationMode { SSB, DSB };
/// How a layer's input modulator maps its drive voltage onto the field.
enum class Transfer { Linear, Sine };
enum class MultiplyPath { Auto, Tones, Time };

struct Layer {
  LayerPlan plan;
  Matrix weights;  // R x N
  NonlinearityParams activation;
  ModulationMode mode = ModulationMode::SSB;
  Transfer transfer = Transfer::Sine;
  double amplifier_gain = 1.0;
};

struct ReadoutConfig {
  enum class Mode { OutputBand, RandomBand };

  Mode mode = Mode::OutputBand;
  std::uint64_t seed = 0;
  std::int64_t band_lo = 0;  // RandomBand: first index; 0 draws it from `seed`
  std::int64_t width = 0;    // RandomBand: number of tones; 0 = final R
  bool sign_recovery = false;
};

struct NetworkSpec {
  std::vector<Layer> layers;
  ReadoutConfig readout;
  int oversample = 4;
  HarmonicGuard guard = HarmonicGuard::Enforce;
};

/// Throws Error(Validation) when adjacent layers do not connect.
void validate_network(const NetworkSpec& spec);
/// Shared grid of all layers.
FrequencyGrid network_grid(const NetworkSpec& spec);
/// Output tone index of each row of a plan, from the layout formula or, for
/// explicit layouts, by enumeration (-1 where a row has no common index).
std::vector<std::int64_t> plan_outputs(const LayerPlan& plan);
/// The tone indices read out after the last layer.
std::vector<std::int64_t> readout_indices(const NetworkSpec& spec);

struct ReadoutResult {
  std::vector<std::int64_t> indices;
  std::vector<double> values;  // signed when sign recovery is on
  std::vector<double> magnitudes;
  std::vector<double> phases;
  std::vector<bool> ambiguous;  // phase within 1e-6 rad of +-pi/2
  std::int64_t argmax_class = -1;
};

struct StageSpectrum {
  std::string stage;
  MultiToneSignal signal;
};

struct ForwardOptions {
  MultiplyPath path = MultiplyPath::Auto;
  std::vector<StageSpectrum>* trace = nullptr;  // collects every intermediate spectrum
};

MultiToneSignal forward_layer(const MultiToneSignal& input, const Layer& layer, HarmonicGuard guard,
                              const ForwardOptions& options = {});

/// Final photovoltage of the network for input vector x.
MultiToneSignal network_output(const std::vector<double>& x, const NetworkSpec& spec,
                               const ForwardOptions& options = {});

ReadoutResult readout(const MultiToneSignal& signal, const std::vector<std::int64_t>& indices, bool sign_recovery);
/// Same decision rules applied to coefficients already extracted.
ReadoutResult readout_values(const std::vector<std::int64_t>& indices, const std::vector<Complex>& z,
                             bool sign_recovery);

ReadoutResult forward_network(const std::vector<double>& x, const NetworkSpec& spec,
                              const ForwardOptions& options = {});

struct TimeMultiplexResult {
  std::vector<ReadoutResult> results;
  double period_seconds = 0.0;  // 1 / min(df, f0) of the final output
  double total_seconds = 0.0;   // M periods
};

/// M inputs streamed through the same weights, one signal period each.
TimeMultiplexResult time_multiplex(const std::vector<std::vector<double>>& inputs, const NetworkSpec& spec,
                                   const ForwardOptions& options = {});

std::string network_to_json(const NetworkSpec& spec);
NetworkSpec network_from_json(std::string_view json);
std::string readout_to_json(const ReadoutResult& r);
/// stage,freq_hz,magnitude,phase_rad rows for every traced spectrum.
std::string trace_csv(const std::vector<StageSpectrum>& trace);

}  // namespace maft
