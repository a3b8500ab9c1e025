// SPDX-License-Identifier: Apache-2.0
//
// Dense sampled-grid evaluation of a network with reverse-mode gradients
// with respect to every weight matrix. It reproduces forward_network (up to
// rounding) and is the engine behind training.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "maft/network.hpp"

namespace maft {

enum class LossKind { SoftmaxCrossEntropy, MSE };

struct Sample {
  std::vector<double> x;
  std::int64_t label = -1;
  std::vector<double> target;  // MSE target; empty means one-hot of `label`
};

/// Loss of one readout vector z. Cross-entropy uses the magnitudes |z| as
/// logits; MSE uses signed values when `signed_values` is set. When `grad` is
/// given it receives dL/dRe z + i dL/dIm z.
double sample_loss(std::span<const Complex> z, const Sample& sample, LossKind loss, bool signed_values,
                   std::vector<Complex>* grad = nullptr);

struct BatchEvaluation {
  double loss = 0.0;         // mean over the batch
  std::int64_t correct = 0;  // argmax of magnitudes equal to the label
  std::vector<Matrix> gradients;  // d(mean loss)/dW per layer; empty unless requested
};

/// Worker count from MAFT_THREADS, else the hardware concurrency.
int default_thread_count();

class PhysicsModel {
 public:
  explicit PhysicsModel(NetworkSpec spec);

  const NetworkSpec& spec() const noexcept { return spec_; }
  const FrequencyGrid& grid() const noexcept { return grid_; }
  const std::vector<std::int64_t>& readout_indices() const noexcept { return readout_; }

  void set_weights(std::size_t layer, const Matrix& w);

  /// Complex coefficients at the readout indices.
  std::vector<Complex> outputs(const std::vector<double>& x) const;
  ReadoutResult infer(const std::vector<double>& x) const;

  /// Mean loss (and gradients) over the batch. Samples are processed in
  /// parallel; per-sample gradient fields are summed by a fixed pairwise
  /// tree, so the result does not depend on the thread count.
  BatchEvaluation evaluate(std::span<const Sample* const> batch, LossKind loss, bool want_gradients,
                           int threads = 0) const;

 private:
  struct LayerData {
    std::vector<std::int64_t> weight_index;  // R*N row-major
    std::vector<Complex> weight_field;       // sampled SSB weight field
    std::vector<Complex> response;           // filter * delay * gain for k = 0..K
  };
  struct Tape;

  void refresh(std::size_t layer);
  void forward(const std::vector<double>& x, Tape& tape) const;
  void backward(Tape& tape, std::span<const Complex> gz) const;

  NetworkSpec spec_;
  FrequencyGrid grid_;
  std::vector<std::int64_t> readout_;
  std::vector<LayerData> layers_;
};

}  // namespace maft
