// SPDX-License-Identifier: Apache-2.0
#include "maft/perf.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json_util.hpp"
#include "maft/error.hpp"

namespace maft {

namespace {

using Big = boost::multiprecision::cpp_rational;

Big big(const Rational& r) { return Big(r.numerator()) / Big(r.denominator()); }

Rational small(const Big& b) {
  using boost::multiprecision::cpp_int;
  const cpp_int num = boost::multiprecision::numerator(b);
  const cpp_int den = boost::multiprecision::denominator(b);
  const cpp_int lim = std::numeric_limits<std::int64_t>::max();
  if (abs(num) > lim || den > lim) fail(ErrorCode::Numerical, "rational result exceeds 64-bit range");
  return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

void check_nr(std::int64_t n, std::int64_t r) {
  require(n >= 1 && r >= 1, ErrorCode::InvalidArgument, "N and R must be >= 1");
  require(n <= 100000000 && r <= 100000000, ErrorCode::InvalidArgument, "N and R must be <= 1e8");
}

void require_closed_form(const LayerPlan& p) {
  if (p.scheme == Scheme::Custom) {
    fail(ErrorCode::InvalidArgument, "custom plans have no closed-form throughput; use the counted value");
  }
}

}  // namespace

Rational reduction_ratio(std::int64_t n, std::int64_t r) {
  check_nr(n, r);
  return small(Big(2 * n) * r / (Big(3 * n) * r + r - 1));
}

Rational reduction_ratio_published(std::int64_t n, std::int64_t r) {
  check_nr(n, r);
  return small(Big(2 * n) * r / (Big(3 * n) * r + r + 1));
}

Rational expansion_ratio(std::int64_t r) {
  check_nr(1, r);
  return Rational(r, 1 + r);
}

Rational reduction_pd_ratio(std::int64_t n, std::int64_t r) {
  check_nr(n, r);
  return small(Big(2 * n) * r / (Big(n) * r + r - 1));
}

ThroughputCount count_throughput(const LayerPlan& plan) {
  validate_plan(plan);
  const Big base = big(plan.base_spacing);
  std::vector<std::int64_t> outputs;
  if (plan.weight_indices.empty()) {
    outputs = {plan.output_index(1)};
    if (plan.n_outputs > 1) outputs.push_back(plan.output_index(2));
  } else {
    for (auto k : enumerate_products(plan).row_output) {
      require(k > 0, ErrorCode::Validation, "plan has rows without a common output tone");
      outputs.push_back(k);
    }
    std::sort(outputs.begin(), outputs.end());
    outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
  }
  std::int64_t unit = std::min(plan.input_index(1), outputs.front());
  if (plan.n_inputs > 1) unit = std::min(unit, plan.input_spacing);
  for (std::size_t i = 1; i < outputs.size(); ++i) unit = std::min(unit, outputs[i] - outputs[i - 1]);
  const std::int64_t top = std::max(plan.max_weight_index(), plan.max_input_index());
  ThroughputCount c;
  const Big spacing = base * unit;
  const Big bw = base * top;
  const Big macs = Big(plan.n_inputs) * plan.n_outputs * spacing;
  c.min_spacing_hz = small(spacing);
  c.bandwidth_hz = small(bw);
  c.macs_per_second = small(macs);
  c.ratio = small(macs / bw);
  return c;
}

ThroughputReport throughput(const LayerPlan& plan, double bandwidth_hz) {
  require(std::isfinite(bandwidth_hz) && bandwidth_hz >= 0.0, ErrorCode::InvalidArgument,
          "bandwidth must be finite and >= 0");
  ThroughputReport t;
  t.scheme = plan.scheme;
  t.n = plan.n_inputs;
  t.r = plan.n_outputs;
  t.counted = count_throughput(plan);
  t.r0_rounded = plan.r0_rounded;
  t.bandwidth_hz = bandwidth_hz > 0.0 ? bandwidth_hz : to_double(t.counted.bandwidth_hz);
  t.readout_latency_s = 1.0 / to_double(t.counted.min_spacing_hz);
  switch (plan.scheme) {
    case Scheme::Reduction:
      t.closed_form = true;
      t.exact_ratio = reduction_ratio(t.n, t.r);
      t.published_ratio = reduction_ratio_published(t.n, t.r);
      t.approx_ratio = 2.0 / 3.0;
      break;
    case Scheme::Expansion:
      t.closed_form = true;
      t.exact_ratio = expansion_ratio(t.r);
      t.published_ratio = t.exact_ratio;
      t.approx_ratio = 1.0;
      break;
    case Scheme::Custom:
      t.exact_ratio = t.counted.ratio;
      t.published_ratio = t.counted.ratio;
      t.approx_ratio = to_double(t.counted.ratio);
      break;
  }
  t.exact = to_double(t.exact_ratio) * t.bandwidth_hz;
  t.published = to_double(t.published_ratio) * t.bandwidth_hz;
  t.approx = t.approx_ratio * t.bandwidth_hz;
  t.spurious_exact = static_cast<double>(t.n) * t.exact;
  t.spurious_approx = static_cast<double>(t.n) * t.approx;
  return t;
}

double spurious_throughput(const LayerPlan& plan, double bandwidth_hz) {
  require_closed_form(plan);
  return throughput(plan, bandwidth_hz).spurious_exact;
}

ElectronicsLimit electronics_limited_throughput(const LayerPlan& plan, double bandwidth_hz, double pd_bandwidth_hz) {
  require_closed_form(plan);
  require(bandwidth_hz > 0.0 && pd_bandwidth_hz > 0.0, ErrorCode::InvalidArgument, "bandwidths must be positive");
  ElectronicsLimit e;
  const auto t = throughput(plan, bandwidth_hz);
  e.modulator_limited = t.exact;
  e.detector_limited = plan.scheme == Scheme::Reduction
                           ? to_double(reduction_pd_ratio(t.n, t.r)) * pd_bandwidth_hz
                           : pd_bandwidth_hz;
  e.value = std::min(e.modulator_limited, e.detector_limited);
  return e;
}

LatencyBudget latency_from_hardware(double mzm_bw, double pd_bw, double rf_bw, double fiber_m, std::int64_t layers,
                                    double group_index) {
  require(mzm_bw > 0.0 && pd_bw > 0.0 && rf_bw > 0.0, ErrorCode::InvalidArgument, "bandwidths must be positive");
  require(fiber_m >= 0.0 && group_index >= 1.0, ErrorCode::InvalidArgument,
          "fiber length must be >= 0 and group index >= 1");
  constexpr double c = 299792458.0;
  return {1.0 / mzm_bw, 1.0 / pd_bw, 1.0 / rf_bw, fiber_m * group_index / c, layers};
}

double physical_latency(const LatencyBudget& b) {
  require(b.tau_mzm >= 0.0 && b.tau_pd >= 0.0 && b.tau_rf >= 0.0 && b.tau_prop >= 0.0, ErrorCode::InvalidArgument,
          "delays must be >= 0");
  require(b.n_layers >= 1, ErrorCode::InvalidArgument, "layer count must be >= 1");
  return static_cast<double>(b.n_layers) * (b.tau_mzm + b.tau_pd + b.tau_rf + b.tau_prop);
}

void LinkBudget::validate() const {
  for (double v : {r_pd, gamma, p_ld, v_pi, r_in, r_out, h_pd, vw_meansquare}) {
    require(std::isfinite(v) && v > 0.0, ErrorCode::InvalidArgument, "link budget values must be positive");
  }
  require(gamma <= 1.0 || amplified, ErrorCode::Validation, "optical gain above 1 requires an amplified link");
}

double watts_to_dbm(double w) {
  require(w > 0.0, ErrorCode::InvalidArgument, "power must be positive");
  return 10.0 * std::log10(w / 1e-3);
}

LinkGain link_gain(const LinkBudget& b) {
  b.validate();
  LinkGain g;
  const double k = b.r_pd * b.gamma * b.p_ld / b.v_pi;
  g.gain = std::numbers::pi * std::numbers::pi / 8.0 * k * k * b.r_in * b.r_out * b.h_pd * b.h_pd * b.vw_meansquare;
  g.gain_db = 10.0 * std::log10(g.gain);
  g.p_nonlin_w = b.v_pi * b.v_pi / b.r_in;
  g.p_nonlin_dbm = watts_to_dbm(g.p_nonlin_w);
  return g;
}

std::string gain_sweep_csv(const LinkBudget& b, double lo, double hi, int points) {
  require(lo > 0.0 && hi >= lo && points >= 1, ErrorCode::InvalidArgument, "sweep needs 0 < min <= max and >= 1 point");
  std::ostringstream os;
  os.precision(10);
  os << "p_ld_w,gain,gain_db\n";
  for (int i = 0; i < points; ++i) {
    auto x = b;
    x.p_ld = points == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    const auto g = link_gain(x);
    os << x.p_ld << ',' << g.gain << ',' << g.gain_db << '\n';
  }
  return os.str();
}

std::string throughput_to_json(const ThroughputReport& t) {
  using detail::json;
  json j;
  j["scheme"] = to_string(t.scheme);
  j["n"] = t.n;
  j["r"] = t.r;
  j["bandwidth_hz"] = t.bandwidth_hz;
  j["closed_form"] = t.closed_form;
  j["exact_ratio"] = to_string(t.exact_ratio);
  j["published_ratio"] = to_string(t.published_ratio);
  j["approx_ratio"] = t.approx_ratio;
  j["exact_macs_per_s"] = t.exact;
  j["published_macs_per_s"] = t.published;
  j["approx_macs_per_s"] = t.approx;
  j["spurious_exact_macs_per_s"] = t.spurious_exact;
  j["spurious_approx_macs_per_s"] = t.spurious_approx;
  j["counted"] = {{"bandwidth_hz", to_string(t.counted.bandwidth_hz)},
                  {"min_spacing_hz", to_string(t.counted.min_spacing_hz)},
                  {"macs_per_s", to_string(t.counted.macs_per_second)},
                  {"ratio", to_string(t.counted.ratio)}};
  j["r0_rounded"] = t.r0_rounded;
  j["readout_latency_s"] = t.readout_latency_s;
  return j.dump(1);
}

LinkBudget link_budget_from_json(std::string_view text) {
  return detail::guarded_parse("link budget JSON", [&] {
    const auto j = detail::json::parse(text);
    LinkBudget b;
    b.r_pd = j.value("r_pd", b.r_pd);
    b.gamma = j.value("gamma", b.gamma);
    b.p_ld = j.value("p_ld", b.p_ld);
    b.v_pi = j.value("v_pi", b.v_pi);
    b.r_in = j.value("r_in", b.r_in);
    b.r_out = j.value("r_out", b.r_out);
    b.h_pd = j.value("h_pd", b.h_pd);
    b.vw_meansquare = j.value("vw_meansquare", b.vw_meansquare);
    b.amplified = j.value("amplified", false);
    b.validate();
    return b;
  });
}

LatencyBudget latency_budget_from_json(std::string_view text) {
  return detail::guarded_parse("latency budget JSON", [&] {
    const auto j = detail::json::parse(text);
    const auto layers = j.value("n_layers", std::int64_t{1});
    if (j.contains("pd_bandwidth_hz")) {
      return latency_from_hardware(j.at("mzm_bandwidth_hz").get<double>(), j.at("pd_bandwidth_hz").get<double>(),
                                   j.at("rf_bandwidth_hz").get<double>(), j.value("fiber_m", 0.0), layers,
                                   j.value("group_index", 1.0));
    }
    LatencyBudget b;
    b.tau_mzm = j.value("tau_mzm", 0.0);
    b.tau_pd = j.value("tau_pd", 0.0);
    b.tau_rf = j.value("tau_rf", 0.0);
    b.tau_prop = j.value("tau_prop", 0.0);
    b.n_layers = layers;
    physical_latency(b);
    return b;
  });
}

}  // namespace maft
