// SPDX-License-Identifier: Apache-2.0
//
// Offline training of the weight matrices with plain mini-batch SGD through
// the physical model.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "maft/network.hpp"
#include "maft/physics_model.hpp"

namespace maft {

enum class GradientMode { Analytic, FiniteDifference };

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::SoftmaxCrossEntropy;
  GradientMode gradient_mode = GradientMode::Analytic;
  double fd_step = 1e-5;
  int threads = 0;  // 0 = default_thread_count()

  void validate() const;
};

struct Dataset {
  std::vector<Sample> samples;
  std::int64_t n_features = 0;
  std::int64_t n_classes = 0;  // 1 + largest label
};

/// Rows of `label,v1,...,vN`. A header row is skipped if its first field is
/// not a number.
Dataset parse_dataset_csv(std::string_view text);
Dataset load_dataset_csv(const std::string& path);

/// Mean loss and gradients of every weight matrix over the batch.
BatchEvaluation loss_and_gradients(const NetworkSpec& spec, std::span<const Sample* const> batch,
                                   const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;            // mean mini-batch loss seen during the epoch
  double train_accuracy = 0.0;  // from the same mini-batches
  double test_accuracy = -1.0;  // after the epoch; -1 without a test set
  double seconds = 0.0;
};

struct TrainResult {
  NetworkSpec spec;  // last finite weights
  std::vector<EpochRecord> history;
  bool diverged = false;
  std::string message;
};

TrainResult train(const NetworkSpec& spec, const Dataset& data, const TrainConfig& config,
                  const Dataset* test = nullptr, const std::function<void(const EpochRecord&)>& progress = {});

struct DatasetEvaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<std::int64_t>> confusion;  // [true][predicted]
  std::vector<ReadoutResult> results;
};

DatasetEvaluation evaluate_dataset(const NetworkSpec& spec, const Dataset& data, LossKind loss, int threads = 0);

std::string history_to_json(const TrainResult& result);
std::string evaluation_to_json(const DatasetEvaluation& e, bool include_results);

}  // namespace maft
