// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "maft/maft.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s == nullptr ? "" : s;
  maft_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and error state") {
  CHECK(std::string(maft_version()).size() > 0);
  char* out = nullptr;
  CHECK(maft_plan_create(nullptr, &out) == MAFT_INVALID_ARGUMENT);
  CHECK(std::string(maft_last_error()).find("null") != std::string::npos);
  CHECK(maft_plan_create("{not json", &out) == MAFT_INVALID_ARGUMENT);
  CHECK(out == nullptr);
  maft_string_free(nullptr);
}

TEST_CASE("plans through the C API") {
  char* out = nullptr;
  REQUIRE(maft_plan_create(R"({"scheme":"reduction","n":10,"r":10,"dfx_hz":"1e6"})", &out) == MAFT_OK);
  const auto plan = take(out);
  const auto j = json::parse(plan);
  CHECK(j.at("n_inputs") == 10);
  CHECK(std::string(maft_last_error()).empty());
  REQUIRE(maft_plan_validate(plan.c_str()) == MAFT_OK);
  REQUIRE(maft_plan_enumeration_csv(plan.c_str(), &out) == MAFT_OK);
  CHECK(take(out).find('\n') != std::string::npos);
  REQUIRE(maft_plan_margins(plan.c_str(), &out) == MAFT_OK);
  CHECK_FALSE(take(out).empty());
  const double x[10] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  REQUIRE(maft_plan_encode(plan.c_str(), x, 10, "csv", &out) == MAFT_OK);
  CHECK(take(out).find("freq") != std::string::npos);
  CHECK(maft_plan_encode(plan.c_str(), x, 3, "csv", &out) == MAFT_INVALID_ARGUMENT);
  CHECK(maft_plan_encode(plan.c_str(), x, 10, "xml", &out) == MAFT_INVALID_ARGUMENT);

  // Output spacing below dfx/(R-1) with r0 = 0 overlaps the spurious band.
  CHECK(maft_plan_create(R"({"scheme":"custom","n":4,"r":4,"dfx_hz":4,"dfy_hz":1,"r0":0})", &out) ==
        MAFT_VALIDATION);
  CHECK(maft_plan_create(R"({"scheme":"bogus","n":4,"r":4,"dfx_hz":4})", &out) == MAFT_INVALID_ARGUMENT);
}

TEST_CASE("identity network echoes its input") {
  maft_network* net = nullptr;
  char* input = nullptr;
  REQUIRE(maft_network_builtin("identity4", 0, &net, &input) == MAFT_OK);
  const auto x = json::parse(take(input)).get<std::vector<double>>();
  size_t n = 0, r = 0;
  REQUIRE(maft_network_input_size(net, &n) == MAFT_OK);
  REQUIRE(maft_network_output_size(net, &r) == MAFT_OK);
  REQUIRE(n == 4);
  REQUIRE(r == 4);
  std::vector<double> v(r);
  int64_t arg = -1;
  REQUIRE(maft_network_infer(net, x.data(), n, v.data(), &arg) == MAFT_OK);
  // The readout carries the layer's overall scale; the ratios are the input's.
  for (size_t i = 0; i < r; ++i) CHECK(v[i] / v[0] == doctest::Approx(x[i] / x[0]).epsilon(1e-9));
  CHECK(arg == 3);

  char* spec = nullptr;
  REQUIRE(maft_network_to_json(net, &spec) == MAFT_OK);
  maft_network* copy = nullptr;
  REQUIRE(maft_network_from_json(spec, &copy) == MAFT_OK);
  maft_string_free(spec);
  std::vector<double> w(r);
  REQUIRE(maft_network_infer(copy, x.data(), n, w.data(), nullptr) == MAFT_OK);
  CHECK(w == v);

  char* readout = nullptr;
  char* trace = nullptr;
  REQUIRE(maft_network_simulate(net, x.data(), n, "time", &readout, &trace) == MAFT_OK);
  CHECK(json::parse(take(readout)).contains("values"));
  CHECK(take(trace).rfind("stage,", 0) == 0);
  CHECK(maft_network_simulate(net, x.data(), n, "sideways", &readout, nullptr) == MAFT_INVALID_ARGUMENT);
  CHECK(maft_network_infer(net, x.data(), 3, v.data(), nullptr) == MAFT_INVALID_ARGUMENT);
  maft_network_free(copy);
  maft_network_free(net);
  maft_network_free(nullptr);
}

TEST_CASE("unknown example and missing files map to their status codes") {
  maft_network* net = nullptr;
  CHECK(maft_network_builtin("nope", 0, &net, nullptr) == MAFT_INVALID_ARGUMENT);
  CHECK(net == nullptr);
  maft_dataset* d = nullptr;
  CHECK(maft_dataset_load("/nonexistent.csv", &d) == MAFT_IO);
  CHECK(maft_network_from_json("{}", &net) == MAFT_INVALID_ARGUMENT);
  char* names = nullptr;
  REQUIRE(maft_builtin_names(&names) == MAFT_OK);
  CHECK(json::parse(take(names)).size() >= 8);
}

TEST_CASE("training and evaluation through handles") {
  maft_network* net = nullptr;
  REQUIRE(maft_network_builtin("separable2d", 1, &net, nullptr) == MAFT_OK);
  std::string csv = "label,a,b\n";
  for (int i = 0; i < 40; ++i) {
    const double a = 0.05 + 0.9 * ((i * 37) % 40) / 40.0;
    const double b = 0.05 + 0.9 * ((i * 11) % 40) / 40.0;
    if (std::abs(a - b) < 0.1) continue;
    csv += std::to_string(a > b ? 0 : 1) + "," + std::to_string(a) + "," + std::to_string(b) + "\n";
  }
  maft_dataset* data = nullptr;
  REQUIRE(maft_dataset_parse(csv.c_str(), &data) == MAFT_OK);
  size_t samples = 0, features = 0;
  REQUIRE(maft_dataset_size(data, &samples, &features) == MAFT_OK);
  CHECK(features == 2);

  char* hist = nullptr;
  REQUIRE(maft_network_train(net, data, data, R"({"epochs": 60, "batch_size": 8, "learning_rate": 0.2})", &hist) ==
          MAFT_OK);
  const auto h = json::parse(take(hist));
  CHECK(h.at("history").size() == 60);
  char* res = nullptr;
  REQUIRE(maft_network_evaluate(net, data, 1, 1, &res) == MAFT_OK);
  const auto r = json::parse(take(res));
  CHECK(r.at("accuracy").get<double>() >= 0.95);
  CHECK(r.at("results").size() == samples);
  CHECK(maft_network_train(net, data, nullptr, R"({"loss": "hinge"})", &hist) == MAFT_INVALID_ARGUMENT);
  maft_dataset_free(data);
  maft_network_free(net);
}

TEST_CASE("fits and analysis") {
  char* out = nullptr;
  const char* synth = R"({"drive": {"base_spacing_hz": [1, 1], "period_samples": 64, "tones": [[1, 1.0, 0.0]]},
    "truth": {"chi0": 0.1, "chi1": 1.2, "chi2": 2.0, "chi3": 0.4},
    "scales": [0.2, 0.35, 0.5, 0.65, 0.8, 0.95, 1.1, 1.25, 1.4, 1.55]})";
  const auto st = maft_fit_synthesize(synth, &out);
  INFO(maft_last_error());
  REQUIRE(st == MAFT_OK);
  const auto problem = take(out);
  REQUIRE(maft_fit_nonlinear(problem.c_str(), &out) == MAFT_OK);
  const auto fit = json::parse(take(out));
  const auto p = fit.at("params").get<std::vector<double>>();
  CHECK(p[1] == doctest::Approx(1.2).epsilon(1e-6));
  CHECK(p[2] == doctest::Approx(2.0).epsilon(1e-6));

  REQUIRE(maft_analyze(R"({"link": {"v_pi": 0.001}, "latency": {"mzm_bandwidth_hz": 30e9,
      "pd_bandwidth_hz": 45e6, "rf_bandwidth_hz": 1e9, "fiber_m": 10}})",
                       &out) == MAFT_OK);
  const auto rep = json::parse(take(out));
  CHECK(rep["link"]["p_nonlin_dbm"].get<double>() == doctest::Approx(-46.99).epsilon(1e-3));
  CHECK(rep["latency"]["total_s"].get<double>() == doctest::Approx(56.6e-9).epsilon(1e-2));
  CHECK(maft_analyze("{}", &out) == MAFT_INVALID_ARGUMENT);
  CHECK(maft_analyze(R"({"link": {"gamma": 2}})", &out) == MAFT_VALIDATION);
  REQUIRE(maft_gain_sweep_csv("{}", 1e-3, 1e-1, 5, &out) == MAFT_OK);
  CHECK(take(out).rfind("p_ld_w,gain,gain_db\n", 0) == 0);
}
