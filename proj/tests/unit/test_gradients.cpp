// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "maft/error.hpp"
#include "maft/network.hpp"
#include "maft/physics_model.hpp"
#include "oracles.hpp"

using namespace maft;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::int64_t r, std::int64_t c, double scale = 1.0) {
  return Matrix(r, c, oracle::uniform(rng, static_cast<std::size_t>(r * c), -scale, scale));
}

// 8 -> 6 -> 4 with a linear input layer and a sine second layer.
NetworkSpec toy(std::mt19937_64& rng, ModulationMode mode = ModulationMode::SSB) {
  auto p1 = plan_reduction(8, 6, 6);
  p1.filter = FilterPolicy::bandpass(p1.output_index(1), p1.output_index(6));
  p1.sync_delay = 0.013;
  auto p2 = plan_expansion(6, 4, 1, p1.output_offset);
  NetworkSpec spec;
  Layer l1;
  l1.plan = p1;
  l1.weights = random_matrix(rng, 6, 8, 0.5);
  l1.transfer = Transfer::Linear;
  l1.activation = {0.0, 1.1, 0.9, 0.0, 1.2};
  Layer l2;
  l2.plan = p2;
  l2.weights = random_matrix(rng, 4, 6);
  l2.transfer = Transfer::Sine;
  l2.mode = mode;
  l2.activation = {0.05, 0.8, 1.3, 0.4, 1.0};
  l2.amplifier_gain = 2.0;
  spec.layers = {l1, l2};
  spec.oversample = 8;
  return spec;
}

// Loss of the tone-mixing forward model, used as an independent oracle.
double reference_loss(const NetworkSpec& spec, const std::vector<Sample>& batch, LossKind loss) {
  const auto idx = readout_indices(spec);
  double total = 0.0;
  for (const auto& s : batch) {
    const auto y = network_output(s.x, spec);
    std::vector<Complex> z;
    for (auto k : idx) z.push_back(y.at(k));
    total += sample_loss(z, s, loss, spec.readout.sign_recovery);
  }
  return total / static_cast<double>(batch.size());
}

std::vector<const Sample*> pointers(const std::vector<Sample>& v) {
  std::vector<const Sample*> p;
  for (const auto& s : v) p.push_back(&s);
  return p;
}

std::vector<Sample> random_batch(std::mt19937_64& rng, std::size_t n, std::size_t dim, std::int64_t classes) {
  std::vector<Sample> b(n);
  std::uniform_int_distribution<std::int64_t> lab(0, classes - 1);
  for (auto& s : b) {
    s.x = oracle::uniform(rng, dim, 0.0, 1.0);
    s.label = lab(rng);
  }
  return b;
}

}  // namespace

TEST_CASE("dense model reproduces the tone-mixing forward pass") {
  for (auto mode : {ModulationMode::SSB, ModulationMode::DSB}) {
    std::mt19937_64 rng(1);
    auto spec = toy(rng, mode);
    const PhysicsModel model(spec);
    for (int t = 0; t < 3; ++t) {
      const auto x = oracle::uniform(rng, 8, 0.0, 1.0);
      const auto y = network_output(x, spec);
      const auto z = model.outputs(x);
      double err = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        const auto ref = y.at(model.readout_indices()[i]);
        err = std::max(err, std::abs(z[i] - ref));
        scale = std::max(scale, std::abs(ref));
      }
      CHECK(err / scale < 1e-10);
      const auto a = model.infer(x);
      const auto b = forward_network(x, spec);
      CHECK(a.argmax_class == b.argmax_class);
    }
  }
}

TEST_CASE("single linear layer MSE gradient has the least-squares closed form") {
  std::mt19937_64 rng(2);
  const auto plan = plan_reduction(4, 3, 3);
  Layer L;
  L.plan = plan;
  L.weights = random_matrix(rng, 3, 4);
  L.transfer = Transfer::Linear;
  L.activation = {0.0, 2.0, 0.5, 0.0, 3.0};
  L.amplifier_gain = 0.7;
  NetworkSpec spec;
  spec.layers = {L};
  spec.readout.sign_recovery = true;
  // z = chi_pd (chi1 chi2)^2 gain W x
  const double c = 3.0 * 1.0 * 0.7;
  std::vector<Sample> batch(5);
  for (auto& s : batch) {
    s.x = oracle::uniform(rng, 4);
    s.target = oracle::uniform(rng, 3);
  }
  const PhysicsModel model(spec);
  const auto ev = model.evaluate(pointers(batch), LossKind::MSE, true, 1);
  Matrix want(3, 4);
  double loss = 0.0;
  for (const auto& s : batch) {
    const auto y = oracle::matvec(L.weights.data, 3, 4, s.x);
    for (std::int64_t r = 0; r < 3; ++r) {
      const double e = c * y[static_cast<std::size_t>(r)] - s.target[static_cast<std::size_t>(r)];
      loss += e * e / 5.0;
      for (std::int64_t n = 0; n < 4; ++n) want(r, n) += 2.0 * e * c * s.x[static_cast<std::size_t>(n)] / 5.0;
    }
  }
  CHECK(ev.loss == doctest::Approx(loss).epsilon(1e-12));
  CHECK(oracle::rel_err(ev.gradients[0].data, want.data) < 1e-10);
}

TEST_CASE("analytic gradients match central differences of the tone-mixing model") {
  for (auto mode : {ModulationMode::SSB, ModulationMode::DSB}) {
    for (auto loss : {LossKind::SoftmaxCrossEntropy, LossKind::MSE}) {
      std::mt19937_64 rng(17);
      auto spec = toy(rng, mode);
      spec.readout.sign_recovery = loss == LossKind::MSE;
      const auto batch = random_batch(rng, 3, 8, 4);
      const PhysicsModel model(spec);
      const auto ev = model.evaluate(pointers(batch), loss, true, 1);
      CHECK(ev.loss == doctest::Approx(reference_loss(spec, batch, loss)).epsilon(1e-9));
      const double h = 1e-5;
      for (std::size_t j = 0; j < spec.layers.size(); ++j) {
        const auto& g = ev.gradients[j];
        const double gmax = oracle::max_abs(g.data);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          auto plus = spec, minus = spec;
          plus.layers[j].weights.data[i] += h;
          minus.layers[j].weights.data[i] -= h;
          const double fd = (reference_loss(plus, batch, loss) - reference_loss(minus, batch, loss)) / (2.0 * h);
          CHECK(std::abs(g.data[i] - fd) <= 1e-5 * std::max(std::abs(fd), 1e-3 * gmax));
        }
      }
    }
  }
}

TEST_CASE("zero weights give zero gradients") {
  std::mt19937_64 rng(3);
  auto spec = toy(rng);
  for (auto& L : spec.layers) std::fill(L.weights.data.begin(), L.weights.data.end(), 0.0);
  const auto batch = random_batch(rng, 4, 8, 4);
  const auto ev = PhysicsModel(spec).evaluate(pointers(batch), LossKind::SoftmaxCrossEntropy, true, 1);
  CHECK(ev.loss == doctest::Approx(std::log(4.0)));
  for (const auto& g : ev.gradients) CHECK(oracle::max_abs(g.data) == 0.0);
}

TEST_CASE("batch evaluation does not depend on the thread count") {
  std::mt19937_64 rng(4);
  const auto spec = toy(rng);
  const auto batch = random_batch(rng, 13, 8, 4);
  const PhysicsModel model(spec);
  const auto a = model.evaluate(pointers(batch), LossKind::SoftmaxCrossEntropy, true, 1);
  const auto b = model.evaluate(pointers(batch), LossKind::SoftmaxCrossEntropy, true, 3);
  CHECK(a.loss == b.loss);
  CHECK(a.correct == b.correct);
  for (std::size_t j = 0; j < a.gradients.size(); ++j) CHECK(a.gradients[j].data == b.gradients[j].data);
}

TEST_CASE("loss functions") {
  const std::vector<Complex> z{Complex(1.0, 0.0), Complex(0.0, -2.0), Complex(-0.5, 0.0)};
  Sample s;
  s.label = 1;
  std::vector<Complex> g;
  const double ce = sample_loss(z, s, LossKind::SoftmaxCrossEntropy, false, &g);
  const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(0.5));
  CHECK(ce == doctest::Approx(lse - 2.0));
  CHECK(g[1].imag() == doctest::Approx(-(std::exp(2.0 - lse) - 1.0)));
  s.target = {1.0, 0.0, 0.5};
  const double mse_signed = sample_loss(z, s, LossKind::MSE, true);
  CHECK(mse_signed == doctest::Approx(0.0 + 4.0 + 1.0));
  const double mse_mag = sample_loss(z, s, LossKind::MSE, false);
  CHECK(mse_mag == doctest::Approx(0.0 + 4.0 + 0.0));
  // Zero magnitude gives a zero subgradient.
  const std::vector<Complex> zero{Complex{}, Complex(1.0, 0.0)};
  Sample t;
  t.label = 0;
  sample_loss(zero, t, LossKind::SoftmaxCrossEntropy, false, &g);
  CHECK(g[0] == Complex{});
  t.label = 5;
  CHECK_THROWS_AS(sample_loss(zero, t, LossKind::SoftmaxCrossEntropy, false), Error);
}
