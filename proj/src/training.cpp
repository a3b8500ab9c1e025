// SPDX-License-Identifier: Apache-2.0
#include "maft/training.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json_util.hpp"
#include "maft/error.hpp"
#include "parallel.hpp"

namespace maft {

void TrainConfig::validate() const {
  require(std::isfinite(learning_rate) && learning_rate > 0.0, ErrorCode::InvalidArgument,
          "learning rate must be positive");
  require(epochs >= 1, ErrorCode::InvalidArgument, "epochs must be >= 1");
  require(batch_size >= 1, ErrorCode::InvalidArgument, "batch size must be >= 1");
  require(std::isfinite(fd_step) && fd_step > 0.0, ErrorCode::InvalidArgument, "finite-difference step must be > 0");
  require(threads >= 0, ErrorCode::InvalidArgument, "thread count must be >= 0");
}

namespace {

double parse_number(std::string_view field, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  double v = 0.0;
  const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size() || !std::isfinite(v)) {
    fail(ErrorCode::InvalidArgument,
         "dataset line " + std::to_string(line) + ": '" + std::string(field) + "' is not a finite number");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

Dataset parse_dataset_csv(std::string_view text) {
  Dataset d;
  std::size_t pos = 0, lineno = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto fields = split(line);
    if (lineno == 1) {
      double probe = 0.0;
      auto f = fields[0];
      const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), probe);
      if (ec != std::errc()) continue;  // header
    }
    require(fields.size() >= 2, ErrorCode::InvalidArgument,
            "dataset line " + std::to_string(lineno) + ": expected a label and at least one value");
    Sample s;
    const double label = parse_number(fields[0], lineno);
    require(label >= 0 && label == std::floor(label), ErrorCode::InvalidArgument,
            "dataset line " + std::to_string(lineno) + ": label must be a non-negative integer");
    s.label = static_cast<std::int64_t>(label);
    for (std::size_t i = 1; i < fields.size(); ++i) s.x.push_back(parse_number(fields[i], lineno));
    if (d.samples.empty()) d.n_features = static_cast<std::int64_t>(s.x.size());
    require(static_cast<std::int64_t>(s.x.size()) == d.n_features, ErrorCode::InvalidArgument,
            "dataset line " + std::to_string(lineno) + ": expected " + std::to_string(d.n_features) + " values");
    d.n_classes = std::max(d.n_classes, s.label + 1);
    d.samples.push_back(std::move(s));
  }
  require(!d.samples.empty(), ErrorCode::InvalidArgument, "dataset is empty");
  return d;
}

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open dataset '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset_csv(ss.str());
}

namespace {

BatchEvaluation finite_difference(const PhysicsModel& model, std::span<const Sample* const> batch,
                                  const TrainConfig& config) {
  auto ev = model.evaluate(batch, config.loss, false, config.threads);
  PhysicsModel probe = model;
  const double h = config.fd_step;
  for (std::size_t j = 0; j < model.spec().layers.size(); ++j) {
    const auto w0 = model.spec().layers[j].weights;
    Matrix g(w0.rows, w0.cols);
    auto w = w0;
    for (std::size_t i = 0; i < w.data.size(); ++i) {
      w.data[i] = w0.data[i] + h;
      probe.set_weights(j, w);
      const double lp = probe.evaluate(batch, config.loss, false, config.threads).loss;
      w.data[i] = w0.data[i] - h;
      probe.set_weights(j, w);
      const double lm = probe.evaluate(batch, config.loss, false, config.threads).loss;
      w.data[i] = w0.data[i];
      g.data[i] = (lp - lm) / (2.0 * h);
    }
    probe.set_weights(j, w0);
    ev.gradients.push_back(std::move(g));
  }
  return ev;
}

BatchEvaluation gradients_of(const PhysicsModel& model, std::span<const Sample* const> batch,
                             const TrainConfig& config) {
  if (config.gradient_mode == GradientMode::FiniteDifference) return finite_difference(model, batch, config);
  return model.evaluate(batch, config.loss, true, config.threads);
}

void check_labels(const NetworkSpec& spec, const Dataset& data) {
  require(data.n_features == spec.layers.front().plan.n_inputs, ErrorCode::InvalidArgument,
          "dataset has " + std::to_string(data.n_features) + " features, the network expects " +
              std::to_string(spec.layers.front().plan.n_inputs));
  const auto classes = static_cast<std::int64_t>(readout_indices(spec).size());
  require(data.n_classes <= classes, ErrorCode::InvalidArgument,
          "dataset has " + std::to_string(data.n_classes) + " classes but the readout has " +
              std::to_string(classes) + " tones");
}

}  // namespace

BatchEvaluation loss_and_gradients(const NetworkSpec& spec, std::span<const Sample* const> batch,
                                   const TrainConfig& config) {
  config.validate();
  return gradients_of(PhysicsModel(spec), batch, config);
}

TrainResult train(const NetworkSpec& spec, const Dataset& data, const TrainConfig& config, const Dataset* test,
                  const std::function<void(const EpochRecord&)>& progress) {
  config.validate();
  check_labels(spec, data);
  if (test) check_labels(spec, *test);
  PhysicsModel model(spec);
  TrainResult result;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto J = spec.layers.size();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    std::int64_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const Sample*> batch;
      for (auto i = start; i < stop; ++i) batch.push_back(&data.samples[order[i]]);
      BatchEvaluation ev;
      try {
        ev = gradients_of(model, batch, config);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Numerical) throw;
        result.diverged = true;
        result.message = "epoch " + std::to_string(epoch) + ": " + e.what();
        break;
      }
      bool finite = std::isfinite(ev.loss);
      for (const auto& g : ev.gradients) {
        for (double v : g.data) finite = finite && std::isfinite(v);
      }
      if (!finite) {
        result.diverged = true;
        result.message = "epoch " + std::to_string(epoch) + ": loss or gradient is not finite";
        break;
      }
      loss_sum += ev.loss * static_cast<double>(batch.size());
      correct += ev.correct;
      for (std::size_t j = 0; j < J; ++j) {
        auto w = model.spec().layers[j].weights;
        for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] -= config.learning_rate * ev.gradients[j].data[i];
        model.set_weights(j, w);
      }
    }
    if (result.diverged) break;
    const double n = static_cast<double>(order.size());
    rec.loss = loss_sum / n;
    rec.train_accuracy = static_cast<double>(correct) / n;
    if (test) rec.test_accuracy = evaluate_dataset(model.spec(), *test, config.loss, config.threads).accuracy;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);
    if (progress) progress(rec);
  }
  result.spec = model.spec();
  return result;
}

DatasetEvaluation evaluate_dataset(const NetworkSpec& spec, const Dataset& data, LossKind loss, int threads) {
  const PhysicsModel model(spec);
  require(data.n_features == spec.layers.front().plan.n_inputs, ErrorCode::InvalidArgument,
          "dataset feature count does not match the network");
  const auto classes = model.readout_indices().size();
  const auto n = data.samples.size();
  DatasetEvaluation out;
  out.results.resize(n);
  std::vector<double> losses(n);
  detail::parallel_for(n, threads > 0 ? threads : default_thread_count(), [&](std::size_t i) {
    const auto z = model.outputs(data.samples[i].x);
    out.results[i] = readout_values(model.readout_indices(), z, spec.readout.sign_recovery);
    // Labels beyond the readout cannot be scored by the loss.
    if (data.samples[i].label >= 0 && static_cast<std::size_t>(data.samples[i].label) < classes) {
      losses[i] = sample_loss(z, data.samples[i], loss, spec.readout.sign_recovery);
    }
  });
  const auto m = std::max<std::size_t>(classes, static_cast<std::size_t>(data.n_classes));
  out.confusion.assign(m, std::vector<std::int64_t>(m, 0));
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = data.samples[i].label;
    const auto pred = out.results[i].argmax_class;
    ++out.confusion[static_cast<std::size_t>(label)][static_cast<std::size_t>(pred)];
    correct += pred == label;
  }
  detail::tree_reduce(losses, 0, n, [](double& a, double b) { a += b; });
  out.loss = losses[0] / static_cast<double>(n);
  out.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return out;
}

std::string history_to_json(const TrainResult& r) {
  detail::json j;
  j["diverged"] = r.diverged;
  if (!r.message.empty()) j["message"] = r.message;
  auto h = detail::json::array();
  for (const auto& e : r.history) {
    detail::json row = {{"epoch", e.epoch}, {"loss", e.loss}, {"train_accuracy", e.train_accuracy}};
    if (e.test_accuracy >= 0.0) row["test_accuracy"] = e.test_accuracy;
    row["seconds"] = e.seconds;
    h.push_back(std::move(row));
  }
  j["history"] = std::move(h);
  return j.dump(1);
}

std::string evaluation_to_json(const DatasetEvaluation& e, bool include_results) {
  detail::json j;
  j["accuracy"] = e.accuracy;
  j["loss"] = e.loss;
  j["confusion"] = e.confusion;
  if (include_results) {
    auto rows = detail::json::array();
    for (const auto& r : e.results) rows.push_back(detail::json::parse(readout_to_json(r)));
    j["results"] = std::move(rows);
  }
  return j.dump(1);
}

}  // namespace maft
