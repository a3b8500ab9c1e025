// SPDX-License-Identifier: Apache-2.0
#include "maft/maft.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "json_util.hpp"
#include "maft/builtins.hpp"
#include "maft/error.hpp"
#include "maft/fit.hpp"
#include "maft/network.hpp"
#include "maft/perf.hpp"
#include "maft/training.hpp"

struct maft_network {
  maft::NetworkSpec spec;
};

struct maft_dataset {
  maft::Dataset data;
};

namespace {

using maft::ErrorCode;
using maft::detail::json;

thread_local std::string last_error;

maft_status status_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return MAFT_INVALID_ARGUMENT;
    case ErrorCode::Validation: return MAFT_VALIDATION;
    case ErrorCode::Numerical: return MAFT_NUMERICAL;
    case ErrorCode::Io: return MAFT_IO;
  }
  return MAFT_INTERNAL;
}

template <class Fn>
maft_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return MAFT_OK;
  } catch (const maft::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const json::exception& e) {
    last_error = std::string("JSON: ") + e.what();
    return MAFT_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return MAFT_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MAFT_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) maft::fail(ErrorCode::InvalidArgument, std::string(name) + " must not be null");
}

void put(char** out, const std::string& s) {
  need(out, "output pointer");
  auto* buf = static_cast<char*>(std::malloc(s.size() + 1));
  if (buf == nullptr) throw std::bad_alloc();
  std::memcpy(buf, s.c_str(), s.size() + 1);
  *out = buf;
}

json parse(const char* text, const char* what) {
  need(text, what);
  return maft::detail::guarded_parse(what, [&] { return json::parse(text); });
}

std::vector<double> vec(const double* x, std::size_t n) {
  if (n > 0) need(x, "input vector");
  return n == 0 ? std::vector<double>{} : std::vector<double>(x, x + n);
}

maft::LayerPlan make_plan(const json& j) {
  using maft::Rational;
  const auto scheme = maft::scheme_from_string(j.at("scheme").get<std::string>());
  const auto n = j.at("n").get<std::int64_t>();
  const auto r = j.at("r").get<std::int64_t>();
  const auto dfx = maft::detail::rational_from(j.at("dfx_hz"));
  const auto n0 = j.value("n0", std::int64_t{0});
  maft::require(dfx > Rational(0), ErrorCode::InvalidArgument, "dfx_hz must be positive");
  switch (scheme) {
    case maft::Scheme::Reduction:
      maft::require(r >= 1, ErrorCode::InvalidArgument, "R must be >= 1");
      return maft::plan_reduction(n, r, r, n0, dfx / r);
    case maft::Scheme::Expansion:
      return maft::plan_expansion(n, r, 1, n0, dfx);
    case maft::Scheme::Custom: {
      const auto dfy = maft::detail::rational_from(j.at("dfy_hz"));
      maft::require(dfy > Rational(0), ErrorCode::InvalidArgument, "dfy_hz must be positive");
      const auto base = maft::rational_gcd(dfx, dfy);
      const auto sx = dfx / base, sy = dfy / base;
      return maft::plan_custom(n, r, sx.numerator(), sy.numerator(), n0, j.value("r0", std::int64_t{0}), base);
    }
  }
  maft::fail(ErrorCode::InvalidArgument, "unknown scheme");
}

maft::TrainConfig train_config(const json& j) {
  maft::TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.fd_step = j.value("fd_step", c.fd_step);
  c.threads = j.value("threads", c.threads);
  const auto loss = j.value("loss", std::string("cross_entropy"));
  if (loss == "mse") {
    c.loss = maft::LossKind::MSE;
  } else if (loss != "cross_entropy") {
    maft::fail(ErrorCode::InvalidArgument, "loss must be 'cross_entropy' or 'mse'");
  }
  const auto grad = j.value("gradient", std::string("analytic"));
  if (grad == "finite_difference") {
    c.gradient_mode = maft::GradientMode::FiniteDifference;
  } else if (grad != "analytic") {
    maft::fail(ErrorCode::InvalidArgument, "gradient must be 'analytic' or 'finite_difference'");
  }
  c.validate();
  return c;
}

}  // namespace

extern "C" {

const char* maft_version(void) { return "1.0.0"; }

const char* maft_last_error(void) { return last_error.c_str(); }

void maft_string_free(char* s) { std::free(s); }

maft_status maft_plan_create(const char* request_json, char** plan_json) {
  return guarded([&] { put(plan_json, maft::plan_to_json(make_plan(parse(request_json, "plan request")))); });
}

maft_status maft_plan_validate(const char* plan_json) {
  return guarded([&] {
    need(plan_json, "plan");
    maft::validate_plan(maft::plan_from_json(plan_json));
  });
}

maft_status maft_plan_enumeration_csv(const char* plan_json, char** csv) {
  return guarded([&] {
    need(plan_json, "plan");
    put(csv, maft::enumeration_csv(maft::plan_from_json(plan_json)));
  });
}

maft_status maft_plan_margins(const char* plan_json, char** text) {
  return guarded([&] {
    need(plan_json, "plan");
    put(text, maft::plan_margins_text(maft::plan_from_json(plan_json)));
  });
}

maft_status maft_plan_encode(const char* plan_json, const double* x, size_t n, const char* format, char** out) {
  return guarded([&] {
    need(plan_json, "plan");
    const auto plan = maft::plan_from_json(plan_json);
    const auto s = maft::encode_input(plan, vec(x, n), maft::plan_grid(plan));
    const std::string f = format == nullptr ? "json" : format;
    if (f == "csv") {
      put(out, maft::spectrum_csv(s));
    } else if (f == "json") {
      put(out, maft::to_json(s));
    } else {
      maft::fail(ErrorCode::InvalidArgument, "format must be 'json' or 'csv'");
    }
  });
}

maft_status maft_network_from_json(const char* spec_json, maft_network** out) {
  return guarded([&] {
    need(spec_json, "network spec");
    need(out, "output handle");
    auto spec = maft::network_from_json(spec_json);
    *out = new maft_network{std::move(spec)};
  });
}

maft_status maft_network_builtin(const char* name, uint64_t seed, maft_network** out, char** input_json) {
  return guarded([&] {
    need(name, "example name");
    need(out, "output handle");
    auto ex = maft::builtin_example(name, seed);
    if (input_json != nullptr) put(input_json, json(ex.input).dump());
    *out = new maft_network{std::move(ex.spec)};
  });
}

maft_status maft_builtin_names(char** out) {
  return guarded([&] {
    json j = json::array();
    for (const auto& n : maft::builtin_names()) {
      j.push_back({{"name", n}, {"description", maft::builtin_example(n).description}});
    }
    put(out, j.dump(1));
  });
}

void maft_network_free(maft_network* net) { delete net; }

maft_status maft_network_to_json(const maft_network* net, char** spec_json) {
  return guarded([&] {
    need(net, "network");
    put(spec_json, maft::network_to_json(net->spec));
  });
}

maft_status maft_network_input_size(const maft_network* net, size_t* n) {
  return guarded([&] {
    need(net, "network");
    need(n, "output");
    *n = static_cast<size_t>(net->spec.layers.front().plan.n_inputs);
  });
}

maft_status maft_network_output_size(const maft_network* net, size_t* r) {
  return guarded([&] {
    need(net, "network");
    need(r, "output");
    *r = maft::readout_indices(net->spec).size();
  });
}

maft_status maft_network_infer(const maft_network* net, const double* x, size_t n, double* values,
                               int64_t* argmax) {
  return guarded([&] {
    need(net, "network");
    need(values, "values");
    const auto r = maft::forward_network(vec(x, n), net->spec);
    std::copy(r.values.begin(), r.values.end(), values);
    if (argmax != nullptr) *argmax = r.argmax_class;
  });
}

maft_status maft_network_simulate(const maft_network* net, const double* x, size_t n, const char* path,
                                  char** readout_json, char** trace_csv) {
  return guarded([&] {
    need(net, "network");
    maft::ForwardOptions opt;
    const std::string p = path == nullptr ? "auto" : path;
    if (p == "tones") {
      opt.path = maft::MultiplyPath::Tones;
    } else if (p == "time") {
      opt.path = maft::MultiplyPath::Time;
    } else if (p != "auto") {
      maft::fail(ErrorCode::InvalidArgument, "path must be 'auto', 'tones' or 'time'");
    }
    std::vector<maft::StageSpectrum> trace;
    if (trace_csv != nullptr) opt.trace = &trace;
    const auto r = maft::forward_network(vec(x, n), net->spec, opt);
    put(readout_json, maft::readout_to_json(r));
    if (trace_csv != nullptr) put(trace_csv, maft::trace_csv(trace));
  });
}

maft_status maft_dataset_load(const char* path, maft_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "output handle");
    *out = new maft_dataset{maft::load_dataset_csv(path)};
  });
}

maft_status maft_dataset_parse(const char* csv, maft_dataset** out) {
  return guarded([&] {
    need(csv, "CSV text");
    need(out, "output handle");
    *out = new maft_dataset{maft::parse_dataset_csv(csv)};
  });
}

void maft_dataset_free(maft_dataset* data) { delete data; }

maft_status maft_dataset_size(const maft_dataset* data, size_t* samples, size_t* features) {
  return guarded([&] {
    need(data, "dataset");
    if (samples != nullptr) *samples = data->data.samples.size();
    if (features != nullptr) *features = static_cast<size_t>(data->data.n_features);
  });
}

maft_status maft_network_evaluate(const maft_network* net, const maft_dataset* data, int threads,
                                  int include_results, char** results_json) {
  return guarded([&] {
    need(net, "network");
    need(data, "dataset");
    const auto e = maft::evaluate_dataset(net->spec, data->data, maft::LossKind::SoftmaxCrossEntropy, threads);
    put(results_json, maft::evaluation_to_json(e, include_results != 0));
  });
}

maft_status maft_network_train(maft_network* net, const maft_dataset* train, const maft_dataset* test,
                               const char* config_json, char** history_json) {
  return guarded([&] {
    need(net, "network");
    need(train, "training set");
    const auto config = train_config(config_json == nullptr ? json::object() : parse(config_json, "train config"));
    auto r = maft::train(net->spec, train->data, config, test == nullptr ? nullptr : &test->data);
    if (history_json != nullptr) put(history_json, maft::history_to_json(r));
    net->spec = std::move(r.spec);
  });
}

maft_status maft_fit_linear(const char* samples_json, char** result_json) {
  return guarded([&] {
    need(samples_json, "samples");
    const auto s = maft::linear_samples_from_json(samples_json);
    put(result_json, maft::fit_result_to_json(maft::fit_linear_scale(s)));
  });
}

maft_status maft_fit_nonlinear(const char* problem_json, char** result_json) {
  return guarded([&] {
    need(problem_json, "problem");
    const auto p = maft::nonlinear_problem_from_json(problem_json);
    put(result_json, maft::fit_result_to_json(maft::fit_nonlinearity(p)));
  });
}

maft_status maft_fit_synthesize(const char* request_json, char** problem_json) {
  return guarded([&] {
    const auto j = parse(request_json, "synthesis request");
    const auto drive = maft::signal_from_json(j.at("drive").dump());
    maft::NonlinearityParams truth;
    const auto& t = j.at("truth");
    truth.chi0 = t.at("chi0").get<double>();
    truth.chi1 = t.at("chi1").get<double>();
    truth.chi2 = t.at("chi2").get<double>();
    truth.chi3 = t.at("chi3").get<double>();
    truth.validate();
    const auto scales = j.at("scales").get<std::vector<double>>();
    const auto probes = j.value("probe_indices", std::vector<std::int64_t>{});
    const auto p = maft::synthesize_nonlinear_data(drive, truth, scales, probes, j.value("noise_sigma", 0.0),
                                                   j.value("seed", std::uint64_t{0}));
    put(problem_json, maft::nonlinear_problem_to_json(p));
  });
}

maft_status maft_analyze(const char* request_json, char** report_json) {
  return guarded([&] {
    const auto j = parse(request_json, "analysis request");
    json report = json::object();
    if (j.contains("plan")) {
      const auto plan = maft::detail::plan_from(j.at("plan"));
      const double b = j.value("bandwidth_hz", 0.0);
      const auto t = maft::throughput(plan, b);
      report["throughput"] = json::parse(maft::throughput_to_json(t));
      if (j.contains("pd_bandwidth_hz") && t.closed_form) {
        const auto e =
            maft::electronics_limited_throughput(plan, t.bandwidth_hz, j.at("pd_bandwidth_hz").get<double>());
        report["electronics_limited"] = {{"modulator_limited_macs_per_s", e.modulator_limited},
                                         {"detector_limited_macs_per_s", e.detector_limited},
                                         {"macs_per_s", e.value}};
      }
    }
    if (j.contains("link")) {
      const auto g = maft::link_gain(maft::link_budget_from_json(j.at("link").dump()));
      report["link"] = {{"gain", g.gain},
                        {"gain_db", g.gain_db},
                        {"p_nonlin_w", g.p_nonlin_w},
                        {"p_nonlin_dbm", g.p_nonlin_dbm}};
    }
    if (j.contains("latency")) {
      const auto b = maft::latency_budget_from_json(j.at("latency").dump());
      report["latency"] = {{"tau_mzm_s", b.tau_mzm}, {"tau_pd_s", b.tau_pd},   {"tau_rf_s", b.tau_rf},
                           {"tau_prop_s", b.tau_prop}, {"n_layers", b.n_layers}, {"total_s", maft::physical_latency(b)}};
    }
    maft::require(!report.empty(), ErrorCode::InvalidArgument,
                  "analysis request needs at least one of 'plan', 'link', 'latency'");
    put(report_json, report.dump(1));
  });
}

maft_status maft_gain_sweep_csv(const char* link_json, double p_ld_min, double p_ld_max, int points, char** csv) {
  return guarded([&] {
    need(link_json, "link budget");
    put(csv, maft::gain_sweep_csv(maft::link_budget_from_json(link_json), p_ld_min, p_ld_max, points));
  });
}

}  // extern "C"
