// SPDX-License-Identifier: Apache-2.0
#include "maft/builtins.hpp"

#include <cmath>
#include <random>

#include "maft/error.hpp"

namespace maft {

namespace {

Matrix init_weights(std::mt19937_64& rng, std::int64_t rows, std::int64_t cols, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix w(rows, cols);
  for (auto& v : w.data) v = u(rng);
  return w;
}

Layer make_layer(LayerPlan plan, Matrix w, Transfer t, NonlinearityParams a = {}, double gain = 1.0) {
  Layer L;
  L.plan = std::move(plan);
  L.weights = std::move(w);
  L.transfer = t;
  L.activation = a;
  L.amplifier_gain = gain;
  return L;
}

BuiltinExample fig2b() {
  LayerPlan p;
  p.base_spacing = Rational(1000000);
  p.n_inputs = 2;
  p.n_outputs = 2;
  p.scheme = Scheme::Custom;
  // W11, W12, W21, W22 at 3, 5, 7, 9 MHz: no two partial sums share a tone.
  p.weight_indices = {3, 5, 7, 9};
  BuiltinExample e{"fig2b", "2x2 layout that separates all eight partial sums (1-8 MHz)", {}, {1.0, -0.5}};
  e.spec.layers.push_back(
      make_layer(p, Matrix(2, 2, std::vector<double>{0.9, 0.6, 0.3, -0.8}), Transfer::Linear));
  e.spec.readout.mode = ReadoutConfig::Mode::RandomBand;
  e.spec.readout.band_lo = 1;
  e.spec.readout.width = 8;
  e.spec.readout.sign_recovery = true;
  return e;
}

BuiltinExample fig2c() {
  // 1 MHz input spacing on a 0.5 MHz grid: outputs at 1 and 1.5 MHz.
  BuiltinExample e{"fig2c", "2x2 frequency reduction, outputs between the spurious bands", {}, {1.0, -0.5}};
  e.spec.layers.push_back(make_layer(plan_reduction(2, 2, 2, 0, Rational(500000)),
                                     Matrix(2, 2, std::vector<double>{0.9, 0.6, 0.3, -0.8}), Transfer::Linear));
  e.spec.readout.sign_recovery = true;
  return e;
}

BuiltinExample fig2d() {
  BuiltinExample e{"fig2d", "2x2 frequency expansion, outputs interleaved with spurious tones", {}, {1.0, -0.5}};
  e.spec.layers.push_back(make_layer(plan_expansion(2, 2, 1, 0, Rational(1000000)),
                                     Matrix(2, 2, std::vector<double>{0.9, 0.6, 0.3, -0.8}), Transfer::Linear));
  e.spec.readout.sign_recovery = true;
  return e;
}

BuiltinExample identity(std::int64_t n) {
  BuiltinExample e{"identity" + std::to_string(n), "one linear layer with the identity matrix", {}, {}};
  Matrix w(n, n);
  for (std::int64_t i = 0; i < n; ++i) w(i, i) = 1.0;
  e.spec.layers.push_back(make_layer(plan_reduction(n, n, n), w, Transfer::Linear));
  e.spec.readout.sign_recovery = true;
  for (std::int64_t i = 0; i < n; ++i) e.input.push_back(0.1 * static_cast<double>(i + 1));
  return e;
}

BuiltinExample separable(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BuiltinExample e{"separable2d", "one linear layer, 2 inputs, 2 classes", {}, {0.8, 0.2}};
  e.spec.layers.push_back(make_layer(plan_reduction(2, 2, 2), init_weights(rng, 2, 2, 0.5), Transfer::Linear,
                                     {}, 4.0));
  return e;
}

BuiltinExample toy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto p1 = plan_reduction(8, 6, 6);
  p1.filter = FilterPolicy::bandpass(p1.output_index(1), p1.output_index(6));
  auto p2 = plan_expansion(6, 4, 1, p1.output_offset);
  p2.filter = FilterPolicy::comb(p2.output_spacing, p2.output_index(1), p2.output_index(4));
  BuiltinExample e{"toy-8-6-4", "8 -> 6 -> 4 with a sine second layer", {}, {}};
  e.spec.layers.push_back(make_layer(p1, init_weights(rng, 6, 8, 0.6), Transfer::Linear));
  e.spec.layers.push_back(make_layer(p2, init_weights(rng, 4, 6, 0.8), Transfer::Sine, {0.0, 1.0, 1.0, 0.0, 1.0}));
  e.spec.oversample = 8;
  e.input = std::vector<double>{0.1, 0.9, 0.3, 0.5, 0.7, 0.2, 0.4, 0.6};
  return e;
}

// 49 -> 32 -> 16 -> 10 on a 1 Hz grid.
//   layer 1: reduction, inputs every 32 units, outputs 769..800
//   layer 2: expansion, outputs every 32 units from 32 to 512
//   layer 3: custom spacing 3 with r0 = 80, outputs 243..270
BuiltinExample mnist(std::uint64_t seed, bool random_band) {
  std::mt19937_64 rng(seed);
  auto p1 = plan_reduction(49, 32, 32);
  p1.filter = FilterPolicy::bandpass(p1.output_index(1), p1.output_index(32));
  auto p2 = plan_expansion(32, 16, 1, p1.output_offset);
  p2.filter = FilterPolicy::comb(p2.output_spacing, p2.output_index(1), p2.output_index(16));
  auto p3 = plan_custom(16, 10, p2.output_spacing, 3, 0, 80);
  BuiltinExample e{random_band ? "mnist7x7-random-band" : "mnist7x7",
                   random_band ? "7x7 digit classifier read out in a spurious band" : "7x7 digit classifier",
                   {},
                   std::vector<double>(49, 0.5)};
  const NonlinearityParams sine{0.0, 1.0, 1.0, 0.0, 1.0};
  e.spec.layers.push_back(make_layer(p1, init_weights(rng, 32, 49, 0.25), Transfer::Linear, {}, 0.5));
  e.spec.layers.push_back(make_layer(p2, init_weights(rng, 16, 32, 0.4), Transfer::Sine, sine, 1.0));
  e.spec.layers.push_back(make_layer(p3, init_weights(rng, 10, 16, 0.5), Transfer::Sine, sine, 8.0));
  // Oversample 4 lets the third-layer harmonics alias once the weights grow.
  e.spec.oversample = 6;
  if (random_band) {
    e.spec.readout.mode = ReadoutConfig::Mode::RandomBand;
    e.spec.readout.seed = seed;
  }
  return e;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"fig2b", "fig2c", "fig2d", "identity4", "separable2d", "toy-8-6-4", "mnist7x7", "mnist7x7-random-band"};
}

BuiltinExample builtin_example(std::string_view name, std::uint64_t seed) {
  if (name == "fig2b") return fig2b();
  if (name == "fig2c") return fig2c();
  if (name == "fig2d") return fig2d();
  if (name == "identity4") return identity(4);
  if (name == "separable2d") return separable(seed);
  if (name == "toy-8-6-4") return toy(seed);
  if (name == "mnist7x7") return mnist(seed, false);
  if (name == "mnist7x7-random-band") return mnist(seed, true);
  std::string known;
  for (const auto& n : builtin_names()) known += (known.empty() ? "" : ", ") + n;
  fail(ErrorCode::InvalidArgument, "unknown example '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace maft
