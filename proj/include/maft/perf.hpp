// SPDX-License-Identifier: Apache-2.0
//
// Closed-form performance figures: throughput of the two frequency schemes,
// physical latency, and the single-layer RF link gain.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maft/encoding.hpp"

namespace maft {

/// Throughput per unit modulator bandwidth, T/B, as exact rationals.
/// The reduction value follows from r0 = (NR - R - 1)/2 and
/// B = N dfX + (r0 + R) dfY; the published closed form has +1 where this
/// derivation gives -1 in the denominator, and both are reported.
Rational reduction_ratio(std::int64_t n, std::int64_t r);
Rational reduction_ratio_published(std::int64_t n, std::int64_t r);
Rational expansion_ratio(std::int64_t r);
/// T/B_PD when a single photodetector limits the output band.
Rational reduction_pd_ratio(std::int64_t n, std::int64_t r);

struct ThroughputCount {
  Rational bandwidth_hz;      // highest tone of the plan (inputs or weights)
  Rational min_spacing_hz;    // min(df, f0) over inputs and outputs
  Rational macs_per_second;   // N R min(df, f0)
  Rational ratio;             // macs_per_second / bandwidth_hz
};

/// Direct count on a concrete plan.
ThroughputCount count_throughput(const LayerPlan& plan);

struct ThroughputReport {
  Scheme scheme = Scheme::Custom;
  std::int64_t n = 0, r = 0;
  double bandwidth_hz = 0.0;  // B used for the absolute figures
  bool closed_form = false;   // false for custom plans
  Rational exact_ratio;       // derived closed form
  Rational published_ratio;   // as printed; equal to exact_ratio for expansion
  double approx_ratio = 0.0;  // 2/3 or 1
  double exact = 0.0;         // MAC/s
  double published = 0.0;
  double approx = 0.0;
  double spurious_exact = 0.0;  // counting all N^2 R partial products
  double spurious_approx = 0.0;
  ThroughputCount counted;      // on the plan as built (r0 is an integer)
  bool r0_rounded = false;
  double readout_latency_s = 0.0;  // 1 / min(df, f0)
};

/// `bandwidth_hz` <= 0 uses the bandwidth reconstructed from the plan.
ThroughputReport throughput(const LayerPlan& plan, double bandwidth_hz = 0.0);
double spurious_throughput(const LayerPlan& plan, double bandwidth_hz);

struct ElectronicsLimit {
  double modulator_limited = 0.0;  // exact_ratio * B
  double detector_limited = 0.0;   // PD ratio * B_PD
  double value = 0.0;              // the smaller one
};
ElectronicsLimit electronics_limited_throughput(const LayerPlan& plan, double bandwidth_hz, double pd_bandwidth_hz);

struct LatencyBudget {
  double tau_mzm = 0.0;
  double tau_pd = 0.0;
  double tau_rf = 0.0;
  double tau_prop = 0.0;
  std::int64_t n_layers = 1;
};

/// Component delays taken as 1/bandwidth; propagation over `fiber_m` metres
/// at c / `group_index`.
LatencyBudget latency_from_hardware(double mzm_bandwidth_hz, double pd_bandwidth_hz, double rf_bandwidth_hz,
                                    double fiber_m, std::int64_t n_layers = 1, double group_index = 1.0);
double physical_latency(const LatencyBudget& b);

struct LinkBudget {
  double r_pd = 0.8;      // A/W
  double gamma = 1.0;     // optical power transmission
  double p_ld = 0.01;     // W
  double v_pi = 5.0;      // V
  double r_in = 50.0;     // ohm
  double r_out = 50.0;    // ohm
  double h_pd = 1.0;      // |H_PD|
  double vw_meansquare = 1.0;  // V^2
  bool amplified = false; // allows gamma > 1

  void validate() const;
};

struct LinkGain {
  double gain = 0.0;
  double gain_db = 0.0;
  double p_nonlin_w = 0.0;
  double p_nonlin_dbm = 0.0;
};

LinkGain link_gain(const LinkBudget& b);
double watts_to_dbm(double w);

/// p_ld_w,gain,gain_db rows over a logarithmic laser-power sweep.
std::string gain_sweep_csv(const LinkBudget& b, double p_ld_min, double p_ld_max, int points);

std::string throughput_to_json(const ThroughputReport& t);
LinkBudget link_budget_from_json(std::string_view json);
LatencyBudget latency_budget_from_json(std::string_view json);

}  // namespace maft
