// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "maft/error.hpp"
#include "maft/network.hpp"
#include "oracles.hpp"

using namespace maft;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::int64_t r, std::int64_t c) {
  return Matrix(r, c, oracle::uniform(rng, static_cast<std::size_t>(r * c), -1.0, 1.0));
}

Layer linear_layer(LayerPlan plan, Matrix w) {
  Layer L;
  L.plan = std::move(plan);
  L.weights = std::move(w);
  L.transfer = Transfer::Linear;
  return L;
}

// 8 -> 6 -> 4, both layers linear, the first band-limited to its outputs.
NetworkSpec linear_chain(std::mt19937_64& rng) {
  auto p1 = plan_reduction(8, 6, 6);
  p1.filter = FilterPolicy::bandpass(p1.output_index(1), p1.output_index(6));
  auto p2 = plan_expansion(6, 4, 1, p1.output_offset);
  NetworkSpec spec;
  spec.layers.push_back(linear_layer(p1, random_matrix(rng, 6, 8)));
  spec.layers.push_back(linear_layer(p2, random_matrix(rng, 4, 6)));
  spec.readout.sign_recovery = true;
  return spec;
}

}  // namespace

TEST_CASE("single linear layer echoes the identity") {
  const auto plan = plan_reduction(3, 3, 3);
  Matrix eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
  NetworkSpec spec;
  spec.layers.push_back(linear_layer(plan, eye));
  spec.readout.sign_recovery = true;
  const std::vector<double> x{0.25, -0.5, 0.75};
  const auto r = forward_network(x, spec);
  REQUIRE(r.values.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(r.values[static_cast<std::size_t>(i)] == doctest::Approx(x[i]).epsilon(1e-12));
  CHECK(r.argmax_class == 2);
  CHECK(r.indices == plan_outputs(plan));
}

TEST_CASE("chained linear layers equal the matrix product") {
  std::mt19937_64 rng(11);
  const auto spec = linear_chain(rng);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = oracle::uniform(rng, 8, -1.0, 1.0);
    const auto h = oracle::matvec(spec.layers[0].weights.data, 6, 8, x);
    const auto want = oracle::matvec(spec.layers[1].weights.data, 4, 6, h);
    for (auto path : {MultiplyPath::Tones, MultiplyPath::Time}) {
      ForwardOptions o;
      o.path = path;
      const auto r = forward_network(x, spec, o);
      CHECK(oracle::rel_err(r.values, want) < 1e-8);
    }
  }
}

TEST_CASE("consistent permutation of inputs and weight columns leaves the output unchanged") {
  std::mt19937_64 rng(5);
  auto spec = linear_chain(rng);
  spec.layers[1].transfer = Transfer::Sine;
  spec.layers[1].activation.chi2 = 0.7;
  const auto x = oracle::uniform(rng, 8, -1.0, 1.0);
  std::vector<std::size_t> perm{3, 0, 7, 1, 6, 2, 5, 4};
  auto permuted = spec;
  std::vector<double> px(8);
  for (std::size_t i = 0; i < 8; ++i) {
    px[i] = x[perm[i]];
    for (std::int64_t r = 0; r < 6; ++r) {
      permuted.layers[0].weights(r, static_cast<std::int64_t>(i)) =
          spec.layers[0].weights(r, static_cast<std::int64_t>(perm[i]));
    }
  }
  const auto a = forward_network(x, spec);
  const auto b = forward_network(px, permuted);
  CHECK(oracle::max_abs_diff(a.values, b.values) < 1e-10);
}

TEST_CASE("argmax is invariant to positive input scaling in a linear network") {
  std::mt19937_64 rng(8);
  const auto spec = linear_chain(rng);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = oracle::uniform(rng, 8, -1.0, 1.0);
    const auto base = forward_network(x, spec).argmax_class;
    for (double s : {0.01, 3.0, 250.0}) {
      auto y = x;
      for (auto& v : y) v *= s;
      CHECK(forward_network(y, spec).argmax_class == base);
    }
  }
}

TEST_CASE("readout decisions") {
  const FrequencyGrid g(Rational(1), 64);
  MultiToneSignal s(g, {{3, Complex(-0.3, 0.0)}, {5, Complex(0.0, 0.4)}, {7, Complex(0.2, 0.1)}});
  const auto r = readout(s, {3, 5, 7}, true);
  CHECK(r.values[0] == doctest::Approx(-0.3));
  CHECK(r.ambiguous[1]);
  CHECK_FALSE(r.ambiguous[0]);
  CHECK(r.values[2] == doctest::Approx(std::abs(Complex(0.2, 0.1))));
  CHECK(r.argmax_class == 1);
  const auto m = readout(s, {3, 5, 7}, false);
  CHECK(m.values[0] == doctest::Approx(0.3));
  // Ties go to the lowest index.
  const MultiToneSignal t(g, {{3, Complex(0.5, 0.0)}, {5, Complex(-0.5, 0.0)}});
  CHECK(readout(t, {3, 5}, false).argmax_class == 0);
  CHECK_THROWS_AS(readout(s, {40}, false), Error);
}

TEST_CASE("random band readout is reproducible and matches enumerated partial sums") {
  std::mt19937_64 rng(21);
  const auto plan = plan_reduction(4, 3, 3);
  NetworkSpec spec;
  spec.layers.push_back(linear_layer(plan, random_matrix(rng, 3, 4)));
  spec.readout.mode = ReadoutConfig::Mode::RandomBand;
  spec.readout.seed = 1234;
  spec.readout.sign_recovery = true;

  const auto idx = readout_indices(spec);
  CHECK(idx == readout_indices(spec));
  CHECK(idx.size() == 3);
  auto other = spec;
  other.readout.seed = 99;
  bool differs = false;
  for (int s = 0; s < 8 && !differs; ++s) {
    other.readout.seed = static_cast<std::uint64_t>(s);
    differs = readout_indices(other) != idx;
  }
  CHECK(differs);

  const auto x = oracle::uniform(rng, 4, -1.0, 1.0);
  const auto r = forward_network(x, spec);
  const auto e = enumerate_products(plan, true);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double want = 0.0;
    for (const auto& t : e.terms) {
      if (t.index == idx[i]) want += t.sign * spec.layers[0].weights(t.r - 1, t.n_w - 1) * x[t.n_x - 1];
    }
    CHECK(r.values[i] == doctest::Approx(want).epsilon(1e-9));
  }

  auto fixed = spec;
  fixed.readout.band_lo = 2;
  fixed.readout.width = 2;
  CHECK(readout_indices(fixed) == std::vector<std::int64_t>{2, 3});
}

TEST_CASE("time multiplexing streams independent periods") {
  std::mt19937_64 rng(3);
  const auto spec = linear_chain(rng);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(oracle::uniform(rng, 8, -1.0, 1.0));
  const auto one = time_multiplex({xs[0]}, spec);
  REQUIRE(one.results.size() == 1);
  CHECK(one.results[0].values == forward_network(xs[0], spec).values);
  // Final outputs sit at 6, 12, 18, 24: gap and lowest tone are both 6 units.
  CHECK(one.period_seconds == doctest::Approx(1.0 / 6.0));
  const auto three = time_multiplex(xs, spec);
  REQUIRE(three.results.size() == 3);
  CHECK(three.total_seconds == doctest::Approx(3.0 * three.period_seconds));
  for (std::size_t i = 0; i < 3; ++i) CHECK(three.results[i].values == forward_network(xs[i], spec).values);
  CHECK_THROWS_AS(time_multiplex({}, spec), Error);
}

TEST_CASE("small reduction and expansion layouts") {
  // Reduction, 2 x 2, input spacing 1 MHz on a 0.5 MHz grid.
  const auto red = plan_reduction(2, 2, 2, 0, Rational(500000));
  CHECK(red.output_spacing == 1);
  const auto e = enumerate_products(red);
  const FrequencyGrid g(Rational(500000), 64);
  std::vector<double> outs, spur;
  for (auto k : e.output_set) outs.push_back(g.frequency_hz(k));
  for (auto k : e.spurious_set) spur.push_back(g.frequency_hz(k));
  CHECK(outs == std::vector<double>{1e6, 1.5e6});
  CHECK(spur == std::vector<double>{0.0, 0.5e6, 2e6, 2.5e6});
  CHECK(e.collisions.empty());

  const auto exp = plan_expansion(2, 2, 1, 0, Rational(1000000));
  CHECK(exp.output_spacing == 2);
  const auto ee = enumerate_products(exp);
  CHECK(ee.output_set == std::vector<std::int64_t>{2, 4});
  CHECK(ee.spurious_set == std::vector<std::int64_t>{1, 3, 5});
  CHECK(ee.collisions.empty());
}

TEST_CASE("network JSON round trip and connection checks") {
  std::mt19937_64 rng(4);
  auto spec = linear_chain(rng);
  spec.layers[1].transfer = Transfer::Sine;
  spec.layers[1].activation = {0.1, 1.2, 0.8, 0.3, 0.9};
  spec.layers[1].amplifier_gain = 2.5;
  spec.readout.mode = ReadoutConfig::Mode::RandomBand;
  spec.readout.seed = 77;
  const auto back = network_from_json(network_to_json(spec));
  CHECK(network_to_json(back) == network_to_json(spec));
  const auto x = oracle::uniform(rng, 8, -1.0, 1.0);
  CHECK(forward_network(x, back).values == forward_network(x, spec).values);

  auto broken = spec;
  broken.layers[1].plan = plan_expansion(6, 4, 1, 0);
  try {
    validate_network(broken);
    FAIL("expected a validation error");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::Validation);
  }
  CHECK_THROWS_AS(network_from_json("{\"layers\": 3}"), Error);
  CHECK_THROWS_AS(network_from_json("not json"), Error);
}

TEST_CASE("trace records every stage") {
  std::mt19937_64 rng(9);
  auto spec = linear_chain(rng);
  spec.layers[1].transfer = Transfer::Sine;
  std::vector<StageSpectrum> trace;
  ForwardOptions o;
  o.trace = &trace;
  const auto x = oracle::uniform(rng, 8, -1.0, 1.0);
  const auto y = network_output(x, spec, o);
  std::set<std::string> stages;
  for (const auto& s : trace) stages.insert(s.stage);
  for (const char* want : {"layer1/drive", "layer1/input_field", "layer1/weight_field", "layer1/photovoltage",
                           "layer1/output", "layer2/drive", "layer2/output"}) {
    CHECK(stages.count(want) == 1);
  }
  CHECK(trace.back().stage == "layer2/output");
  CHECK(trace.back().signal.tones() == y.tones());
  const auto csv = trace_csv(trace);
  CHECK(csv.rfind("stage,freq_hz,magnitude,phase_rad\n", 0) == 0);
  CHECK(csv.find("layer2/photovoltage,") != std::string::npos);
}

TEST_CASE("sine layers agree across multiplication paths") {
  std::mt19937_64 rng(13);
  auto spec = linear_chain(rng);
  spec.layers[1].transfer = Transfer::Sine;
  spec.layers[1].activation.chi2 = 1.3;
  spec.layers[1].mode = ModulationMode::DSB;
  spec.oversample = 16;
  const auto x = oracle::uniform(rng, 8, -1.0, 1.0);
  ForwardOptions a, b;
  a.path = MultiplyPath::Tones;
  b.path = MultiplyPath::Time;
  CHECK(oracle::max_abs_diff(forward_network(x, spec, a).values, forward_network(x, spec, b).values) < 1e-9);
}
