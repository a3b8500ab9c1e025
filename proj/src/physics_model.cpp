// SPDX-License-Identifier: Apache-2.0
#include "maft/physics_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <thread>

#include "fft.hpp"
#include "parallel.hpp"
#include "maft/error.hpp"

namespace maft {

namespace {

constexpr Complex kI{0.0, 1.0};

}  // namespace

int default_thread_count() {
  if (const char* env = std::getenv("MAFT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::InvalidArgument, std::string("MAFT_THREADS must be a positive integer, got '") + env + "'");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

double sample_loss(std::span<const Complex> z, const Sample& s, LossKind loss, bool signed_values,
                   std::vector<Complex>* grad) {
  const auto R = z.size();
  require(R > 0, ErrorCode::InvalidArgument, "empty readout");
  std::vector<double> mag(R), dm(R);
  for (std::size_t i = 0; i < R; ++i) mag[i] = std::abs(z[i]);
  double L = 0.0;
  std::vector<double> sign(R, 1.0);
  if (loss == LossKind::SoftmaxCrossEntropy) {
    require(s.label >= 0 && static_cast<std::size_t>(s.label) < R, ErrorCode::InvalidArgument,
            "label " + std::to_string(s.label) + " outside the " + std::to_string(R) + " readout classes");
    const double mx = *std::max_element(mag.begin(), mag.end());
    double sum = 0.0;
    for (auto m : mag) sum += std::exp(m - mx);
    const double lse = mx + std::log(sum);
    L = lse - mag[static_cast<std::size_t>(s.label)];
    for (std::size_t i = 0; i < R; ++i) dm[i] = std::exp(mag[i] - lse) - (static_cast<std::int64_t>(i) == s.label);
  } else {
    std::vector<double> t = s.target;
    if (t.empty()) {
      require(s.label >= 0 && static_cast<std::size_t>(s.label) < R, ErrorCode::InvalidArgument,
              "MSE needs a target vector or a valid label");
      t.assign(R, 0.0);
      t[static_cast<std::size_t>(s.label)] = 1.0;
    }
    require(t.size() == R, ErrorCode::InvalidArgument, "target length does not match the readout");
    for (std::size_t i = 0; i < R; ++i) {
      if (signed_values && z[i].real() < 0.0) sign[i] = -1.0;
      const double e = sign[i] * mag[i] - t[i];
      L += e * e;
      dm[i] = 2.0 * e * sign[i];
    }
  }
  if (grad) {
    grad->assign(R, Complex{});
    for (std::size_t i = 0; i < R; ++i) {
      if (mag[i] >= 1e-12) (*grad)[i] = dm[i] * z[i] / mag[i];
    }
  }
  return L;
}

struct PhysicsModel::Tape {
  std::vector<std::vector<Complex>> fx;  // sampled input field per layer
  std::vector<std::vector<double>> v;    // drive samples per sine layer
  std::vector<Complex> out;              // final coefficients, index k
  std::vector<Matrix> grad;              // per-layer weight gradients
};

PhysicsModel::PhysicsModel(NetworkSpec spec) : spec_(std::move(spec)), grid_(network_grid(spec_)) {
  validate_network(spec_);
  readout_ = maft::readout_indices(spec_);
  const auto K = (grid_.period_samples() - 1) / 2;
  for (auto k : readout_) {
    require(k >= 1 && k <= K, ErrorCode::InvalidArgument, "readout index outside the grid");
  }
  layers_.resize(spec_.layers.size());
  for (std::size_t j = 0; j < layers_.size(); ++j) refresh(j);
}

void PhysicsModel::set_weights(std::size_t layer, const Matrix& w) {
  require(layer < spec_.layers.size(), ErrorCode::InvalidArgument, "layer index out of range");
  auto& L = spec_.layers[layer];
  require(w.rows == L.weights.rows && w.cols == L.weights.cols, ErrorCode::InvalidArgument,
          "weight matrix shape does not match the layer");
  for (double v : w.data) require(std::isfinite(v), ErrorCode::Numerical, "non-finite weight");
  L.weights = w;
  refresh(layer);
}

void PhysicsModel::refresh(std::size_t j) {
  const auto& L = spec_.layers[j];
  auto& D = layers_[j];
  const auto P = grid_.period_samples();
  const auto K = (P - 1) / 2;
  const auto& plan = L.plan;
  D.weight_index.clear();
  for (std::int64_t r = 1; r <= plan.n_outputs; ++r) {
    for (std::int64_t n = 1; n <= plan.n_inputs; ++n) D.weight_index.push_back(plan.weight_index(r, n));
  }
  const double g = L.activation.chi1 * L.activation.chi2;
  D.weight_field.assign(static_cast<std::size_t>(P), Complex{});
  for (std::size_t i = 0; i < D.weight_index.size(); ++i) {
    D.weight_field[static_cast<std::size_t>(D.weight_index[i])] = g * L.weights.data[i];
  }
  detail::FftPlan::get(static_cast<std::size_t>(P)).backward(D.weight_field);
  const double w = 2.0 * std::numbers::pi * to_double(grid_.base_spacing()) * plan.sync_delay;
  D.response.assign(static_cast<std::size_t>(K + 1), Complex{});
  D.response[0] = plan.filter.response(0) * L.amplifier_gain;
  for (std::int64_t k = 1; k <= K; ++k) {
    D.response[static_cast<std::size_t>(k)] =
        plan.filter.response(k) * L.amplifier_gain * std::polar(1.0, -w * static_cast<double>(k));
  }
}

void PhysicsModel::forward(const std::vector<double>& x, Tape& tape) const {
  const auto& first = spec_.layers.front().plan;
  require(static_cast<std::int64_t>(x.size()) == first.n_inputs, ErrorCode::InvalidArgument,
          "input has " + std::to_string(x.size()) + " entries, the network expects " +
              std::to_string(first.n_inputs));
  const auto P = grid_.period_samples();
  const auto Pu = static_cast<std::size_t>(P);
  const auto K = static_cast<std::size_t>((P - 1) / 2);
  const auto& fft = detail::FftPlan::get(Pu);
  const double Pd = static_cast<double>(P);

  std::vector<Complex> c(Pu);
  double dc = 0.0;
  for (std::int64_t n = 1; n <= first.n_inputs; ++n) {
    const double xv = x[static_cast<std::size_t>(n - 1)];
    require(std::isfinite(xv), ErrorCode::InvalidArgument, "input values must be finite");
    c[static_cast<std::size_t>(first.input_index(n))] = xv;
  }
  const auto J = spec_.layers.size();
  tape.fx.assign(J, {});
  tape.v.assign(J, {});
  std::vector<Complex> buf(Pu);
  for (std::size_t j = 0; j < J; ++j) {
    const auto& L = spec_.layers[j];
    const auto& a = L.activation;
    const auto& D = layers_[j];
    const bool dsb = L.mode == ModulationMode::DSB;
    std::fill(buf.begin(), buf.end(), Complex{});
    if (L.transfer == Transfer::Linear) {
      const double g = a.chi1 * a.chi2;
      for (std::size_t k = 1; k <= K; ++k) buf[k] = g * c[k];
      fft.backward(buf);
    } else {
      for (std::size_t k = 1; k <= K; ++k) buf[k] = c[k];
      fft.backward(buf);
      auto& v = tape.v[j];
      v.resize(Pu);
      double peak = 0.0;
      for (std::size_t m = 0; m < Pu; ++m) {
        v[m] = buf[m].imag() + dc;
        peak = std::max(peak, std::abs(v[m]));
        buf[m] = std::sin(a.chi2 * v[m] + a.chi3);
      }
      fft.forward(buf);
      if (spec_.guard == HarmonicGuard::Enforce) {
        double cmax = 0.0, power = 0.0;
        for (std::size_t k = 1; k <= K; ++k) cmax = std::max(cmax, std::abs(c[k]));
        std::int64_t kmax = 0;
        for (std::size_t k = 1; k <= K; ++k) {
          if (std::abs(c[k]) > 1e-13 * cmax) kmax = static_cast<std::int64_t>(k);
          power += 0.5 * std::norm(2.0 * buf[k] / Pd);
        }
        const double est = aliased_power_estimate(a.chi2 * peak, kmax, P, power);
        if (est >= 1e-6) {
          fail(ErrorCode::Numerical, "layer " + std::to_string(j + 1) +
                                         ": sine modulator drive too strong for the grid: aliased power estimate " +
                                         std::to_string(est));
        }
      }
      const Complex scale = a.chi1 * 2.0 * kI / Pd;
      buf[0] = 0.0;
      for (std::size_t k = 1; k <= K; ++k) buf[k] *= scale;
      for (std::size_t k = K + 1; k < Pu; ++k) buf[k] = 0.0;
      fft.backward(buf);
    }
    if (dsb) {
      for (auto& z : buf) z = z.real();
    }
    tape.fx[j] = buf;
    const auto& fx = tape.fx[j];
    for (std::size_t m = 0; m < Pu; ++m) buf[m] = a.chi_pd * (std::conj(fx[m]) * D.weight_field[m]).imag();
    fft.forward(buf);
    dc = buf[0].real() / Pd * D.response[0].real();
    std::fill(c.begin(), c.end(), Complex{});
    for (std::size_t k = 1; k <= K; ++k) c[k] = 2.0 * kI * buf[k] / Pd * D.response[k];
  }
  tape.out = std::move(c);
}

void PhysicsModel::backward(Tape& tape, std::span<const Complex> gz) const {
  const auto P = grid_.period_samples();
  const auto Pu = static_cast<std::size_t>(P);
  const auto K = static_cast<std::size_t>((P - 1) / 2);
  const auto& fft = detail::FftPlan::get(Pu);
  const double Pd = static_cast<double>(P);

  std::vector<Complex> gc(Pu), t(Pu), gfx(Pu);
  double gdc = 0.0;
  for (std::size_t i = 0; i < readout_.size(); ++i) gc[static_cast<std::size_t>(readout_[i])] += gz[i];
  const auto J = spec_.layers.size();
  tape.grad.assign(J, {});
  for (std::size_t jj = J; jj-- > 0;) {
    const auto& L = spec_.layers[jj];
    const auto& a = L.activation;
    const auto& D = layers_[jj];
    const auto& fx = tape.fx[jj];
    // Through the filter/delay/gain and the coefficient extraction.
    std::fill(t.begin(), t.end(), Complex{});
    for (std::size_t k = 1; k <= K; ++k) t[k] = gc[k] * std::conj(D.response[k]);
    const double gdc0 = gdc * D.response[0].real();
    fft.backward(t);
    // gy[m] = (2/P) Im(t[m]) + gdc0/P; reuse t's real part to hold it.
    for (std::size_t m = 0; m < Pu; ++m) t[m] = (2.0 * t[m].imag() + gdc0) / Pd;

    // Weight gradient of this sample.
    for (std::size_t m = 0; m < Pu; ++m) gfx[m] = kI * a.chi_pd * t[m].real() * fx[m];
    fft.forward(gfx);
    const double g = a.chi1 * a.chi2;
    Matrix gw(L.weights.rows, L.weights.cols);
    for (std::size_t i = 0; i < D.weight_index.size(); ++i) {
      gw.data[i] = g * gfx[static_cast<std::size_t>(D.weight_index[i])].real();
    }
    tape.grad[jj] = std::move(gw);
    if (jj == 0) break;

    // Through the input field.
    for (std::size_t m = 0; m < Pu; ++m) gfx[m] = -kI * a.chi_pd * t[m].real() * D.weight_field[m];
    if (L.mode == ModulationMode::DSB) {
      for (auto& z : gfx) z = z.real();
    }
    fft.forward(gfx);
    std::fill(gc.begin(), gc.end(), Complex{});
    if (L.transfer == Transfer::Linear) {
      for (std::size_t k = 1; k <= K; ++k) gc[k] = g * gfx[k];
      gdc = 0.0;
    } else {
      gfx[0] = 0.0;
      for (std::size_t k = K + 1; k < Pu; ++k) gfx[k] = 0.0;
      fft.backward(gfx);
      const auto& v = tape.v[jj];
      gdc = 0.0;
      for (std::size_t m = 0; m < Pu; ++m) {
        const double gv = 2.0 * a.chi1 / Pd * gfx[m].imag() * a.chi2 * std::cos(a.chi2 * v[m] + a.chi3);
        gdc += gv;
        gfx[m] = gv;
      }
      fft.forward(gfx);
      for (std::size_t k = 1; k <= K; ++k) gc[k] = kI * gfx[k];
    }
  }
}

std::vector<Complex> PhysicsModel::outputs(const std::vector<double>& x) const {
  Tape tape;
  forward(x, tape);
  std::vector<Complex> z;
  z.reserve(readout_.size());
  for (auto k : readout_) z.push_back(tape.out[static_cast<std::size_t>(k)]);
  return z;
}

ReadoutResult PhysicsModel::infer(const std::vector<double>& x) const {
  return readout_values(readout_, outputs(x), spec_.readout.sign_recovery);
}

BatchEvaluation PhysicsModel::evaluate(std::span<const Sample* const> batch, LossKind loss, bool want_gradients,
                                       int threads) const {
  require(!batch.empty(), ErrorCode::InvalidArgument, "empty batch");
  const auto B = batch.size();
  std::vector<double> losses(B);
  std::vector<char> hit(B);
  std::vector<std::vector<Matrix>> grads(want_gradients ? B : 0);
  const double inv = 1.0 / static_cast<double>(B);
  detail::parallel_for(B, threads > 0 ? threads : default_thread_count(), [&](std::size_t i) {
    Tape tape;
    forward(batch[i]->x, tape);
    std::vector<Complex> z;
    for (auto k : readout_) z.push_back(tape.out[static_cast<std::size_t>(k)]);
    std::vector<Complex> gz;
    losses[i] = sample_loss(z, *batch[i], loss, spec_.readout.sign_recovery, want_gradients ? &gz : nullptr);
    hit[i] = readout_values(readout_, z, false).argmax_class == batch[i]->label;
    if (want_gradients) {
      for (auto& gi : gz) gi *= inv;
      backward(tape, gz);
      grads[i] = std::move(tape.grad);
    }
  });
  BatchEvaluation out;
  detail::tree_reduce(losses, 0, B, [](double& a, double b) { a += b; });
  out.loss = losses[0] * inv;
  for (auto h : hit) out.correct += h;
  if (want_gradients) {
    detail::tree_reduce(grads, 0, B, [](std::vector<Matrix>& a, const std::vector<Matrix>& b) {
      for (std::size_t j = 0; j < a.size(); ++j) {
        for (std::size_t i = 0; i < a[j].data.size(); ++i) a[j].data[i] += b[j].data[i];
      }
    });
    out.gradients = std::move(grads[0]);
  }
  return out;
}

}  // namespace maft
