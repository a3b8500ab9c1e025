// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion on stdout, exit status 1
// if any criterion fails. Optional arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "maft/builtins.hpp"
#include "maft/error.hpp"
#include "maft/fit.hpp"
#include "maft/network.hpp"
#include "maft/perf.hpp"
#include "maft/training.hpp"

using namespace maft;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Row-major R x N times x by direct summation.
std::vector<double> matvec(const std::vector<double>& w, std::int64_t rows, std::int64_t cols,
                           const std::vector<double>& x) {
  std::vector<double> y(static_cast<std::size_t>(rows), 0.0);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) y[r] += w[r * cols + c] * x[c];
  }
  return y;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Layer linear_layer(LayerPlan plan, Matrix w) {
  Layer L;
  L.plan = std::move(plan);
  L.weights = std::move(w);
  L.transfer = Transfer::Linear;
  return L;
}

// Collisions by brute force over all R N^2 products: an off-diagonal
// product landing on the index of any row's diagonal products.
std::size_t brute_collisions(const LayerPlan& p) {
  std::set<std::int64_t> outputs;
  for (std::int64_t r = 1; r <= p.n_outputs; ++r) {
    for (std::int64_t n = 1; n <= p.n_inputs; ++n) outputs.insert(std::abs(p.weight_index(r, n) - p.input_index(n)));
  }
  std::size_t hits = 0;
  for (std::int64_t r = 1; r <= p.n_outputs; ++r) {
    for (std::int64_t nw = 1; nw <= p.n_inputs; ++nw) {
      for (std::int64_t nx = 1; nx <= p.n_inputs; ++nx) {
        if (nw != nx && outputs.count(std::abs(p.weight_index(r, nw) - p.input_index(nx)))) ++hits;
      }
    }
  }
  return hits;
}

// ---------------------------------------------------------------------------

Verdict criterion1() {
  std::mt19937_64 rng(1);
  NetworkSpec spec;
  spec.layers.push_back(linear_layer(plan_reduction(10, 10, 10), Matrix(10, 10)));
  spec.readout.sign_recovery = true;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    spec.layers[0].weights = Matrix(10, 10, uniform(rng, 100));
    const auto x = uniform(rng, 10);
    const auto want = matvec(spec.layers[0].weights.data, 10, 10, x);
    const auto got = forward_network(x, spec).values;
    double err = 0.0;
    for (std::size_t k = 0; k < want.size(); ++k) err = std::max(err, std::abs(got[k] - want[k]));
    worst = std::max(worst, err / max_abs(want));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 60.0,
          fmt("max rel err %.2e over 1000 10x10 products in %.1f s (limits 1e-6, 60 s)", worst, secs)};
}

Verdict criterion2() {
  std::vector<std::string> bad;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) bad.push_back(what);
  };

  // (b) eight single partial sums at 1..8 MHz.
  {
    const auto ex = builtin_example("fig2b");
    const auto& plan = ex.spec.layers[0].plan;
    const auto& w = ex.spec.layers[0].weights;
    const auto e = enumerate_products(plan, true);
    expect(e.spurious_set == std::vector<std::int64_t>{1, 2, 3, 4, 5, 6, 7, 8}, "fig2b tone set");
    bool w22x1 = false;
    for (const auto& t : e.terms) w22x1 |= t.index == 8 && t.r == 2 && t.n_w == 2 && t.n_x == 1;
    expect(w22x1, "W22*X1 at 8 MHz");
    const auto out = network_output(ex.input, ex.spec);
    const FrequencyGrid& g = out.grid();
    std::set<std::int64_t> present;
    double peak = 0.0;
    for (const auto& [k, c] : out.tones()) peak = std::max(peak, std::abs(c));
    for (const auto& [k, c] : out.tones()) {
      if (std::abs(c) > 1e-9 * peak) present.insert(k);
    }
    expect(present == std::set<std::int64_t>{1, 2, 3, 4, 5, 6, 7, 8}, "fig2b simulated tones");
    for (const auto& t : e.terms) {
      const double want = std::abs(w(t.r - 1, t.n_w - 1) * ex.input[t.n_x - 1]);
      expect(std::abs(std::abs(out.at(t.index)) - want) < 1e-9, fmt("fig2b amplitude at %lld", (long long)t.index));
    }
    expect(g.frequency_hz(8) == 8e6, "fig2b 8 MHz tone");
  }
  // (c) reduction: outputs inside the spurious bands.
  {
    const auto ex = builtin_example("fig2c");
    const auto e = enumerate_products(ex.spec.layers[0].plan);
    expect(e.output_set == std::vector<std::int64_t>{2, 3}, "fig2c outputs");
    expect(e.spurious_set == std::vector<std::int64_t>{0, 1, 4, 5}, "fig2c spurious");
    expect(e.collisions.empty(), "fig2c collisions");
    const auto lo = e.output_set.front(), hi = e.output_set.back();
    const bool below = std::any_of(e.spurious_set.begin(), e.spurious_set.end(), [&](auto k) { return k < lo; });
    const bool above = std::any_of(e.spurious_set.begin(), e.spurious_set.end(), [&](auto k) { return k > hi; });
    const bool inside = std::any_of(e.spurious_set.begin(), e.spurious_set.end(),
                                    [&](auto k) { return k > lo && k < hi; });
    expect(below && above && !inside, "fig2c band interior");
    const auto r = forward_network(ex.input, ex.spec);
    const auto want = matvec(ex.spec.layers[0].weights.data, 2, 2, ex.input);
    expect(std::abs(r.values[0] - want[0]) < 1e-12 && std::abs(r.values[1] - want[1]) < 1e-12, "fig2c product");
  }
  // (d) expansion: spurious tones between the outputs.
  {
    const auto ex = builtin_example("fig2d");
    const auto e = enumerate_products(ex.spec.layers[0].plan);
    expect(e.output_set == std::vector<std::int64_t>{2, 4}, "fig2d outputs");
    expect(e.spurious_set == std::vector<std::int64_t>{1, 3, 5}, "fig2d spurious");
    expect(e.collisions.empty(), "fig2d collisions");
    const auto r = forward_network(ex.input, ex.spec);
    const auto want = matvec(ex.spec.layers[0].weights.data, 2, 2, ex.input);
    expect(std::abs(r.values[0] - want[0]) < 1e-12 && std::abs(r.values[1] - want[1]) < 1e-12, "fig2d product");
  }
  std::string detail = "fig2b tones 1..8 MHz with W22*X1 at 8 MHz; fig2c outputs {1, 1.5} MHz inside "
                       "{0, 0.5 | 2, 2.5} MHz; fig2d outputs {2, 4} MHz interleaved with {1, 3, 5} MHz";
  if (!bad.empty()) {
    detail = "mismatch:";
    for (const auto& b : bad) detail += " [" + b + "]";
  }
  return {bad.empty(), detail};
}

Verdict criterion3() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> dn(1, 196), dr(1, 100);
  const NonlinearityParams unit{};
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::int64_t n = i == 0 ? 196 : dn(rng);
    const std::int64_t r = i == 0 ? 100 : dr(rng);
    const auto plan = plan_reduction(n, r, r);
    const auto grid = plan_grid(plan);
    const auto ex = modulate_linear_ssb(encode_input(plan, uniform(rng, n), grid), unit);
    const auto ew = modulate_linear_ssb(weight_frequencies(plan, Matrix(r, n, uniform(rng, n * r)), grid), unit);
    const auto a = photoelectric_multiply(ex, ew, 1.0);
    const auto b = photoelectric_multiply_time(ex, ew, 1.0);
    double peak = 0.0, err = 0.0;
    std::set<std::int64_t> keys;
    for (const auto& [k, c] : a.tones()) {
      keys.insert(k);
      peak = std::max(peak, std::abs(c));
    }
    for (const auto& [k, c] : b.tones()) keys.insert(k);
    for (auto k : keys) err = std::max(err, std::abs(a.at(k) - b.at(k)));
    err = std::max(err, std::abs(a.dc() - b.dc()));
    worst = std::max(worst, err / peak);
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-9 && secs < 300.0,
          fmt("max rel err %.2e between time and tone paths over 100 instances up to 196x100 in %.1f s "
              "(limits 1e-9, 300 s)",
              worst, secs)};
}

Verdict criterion4() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::int64_t> d64(1, 64), d2(2, 64), dk(1, 3), dn0(0, 4), dr0(0, 40);
  std::size_t clean_fail = 0, lib_disagree = 0, boundary_missed = 0;
  for (int i = 0; i < 500; ++i) {
    const auto n = d64(rng), r = d64(rng), k = dk(rng), n0 = dn0(rng);
    const auto p = i % 2 == 0 ? plan_reduction(n, r, r * k, n0) : plan_expansion(n, r, k, n0);
    const auto brute = brute_collisions(p);
    clean_fail += brute != 0;
    lib_disagree += enumerate_products(p).collisions.size() != brute;
  }
  for (int i = 0; i < 200; ++i) {
    const auto n = d2(rng), r = d2(rng), k = dk(rng);
    const auto p = plan_custom(n, r, (r - 1) * k, k, dn0(rng), dr0(rng), Rational(1), false);
    const auto brute = brute_collisions(p);
    boundary_missed += brute == 0;
    lib_disagree += enumerate_products(p).collisions.size() != brute;
  }
  return {clean_fail == 0 && boundary_missed == 0 && lib_disagree == 0,
          fmt("500 planned layouts: %zu with collisions; 200 layouts at df_Y = df_X/(R-1): %zu without; "
              "%zu enumeration/brute-force disagreements",
              clean_fail, boundary_missed, lib_disagree)};
}

// Throughput by counting on the built layout: every input and weight tone,
// B = highest tone, spacing = min(df, f0) over inputs and outputs.
Rational counted_ratio(const LayerPlan& p) {
  std::int64_t top = 0;
  std::set<std::int64_t> outputs;
  for (std::int64_t n = 1; n <= p.n_inputs; ++n) top = std::max(top, p.input_index(n));
  for (std::int64_t r = 1; r <= p.n_outputs; ++r) {
    for (std::int64_t n = 1; n <= p.n_inputs; ++n) {
      top = std::max(top, p.weight_index(r, n));
      outputs.insert(std::abs(p.weight_index(r, n) - p.input_index(n)));
    }
  }
  std::int64_t unit = std::min(p.input_index(1), *outputs.begin());
  if (p.n_inputs > 1) unit = std::min(unit, p.input_index(2) - p.input_index(1));
  for (auto it = std::next(outputs.begin()); it != outputs.end(); ++it) unit = std::min(unit, *it - *std::prev(it));
  return Rational(p.n_inputs * p.n_outputs * unit, top);
}

Verdict criterion5() {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> half(1, 50), dr(1, 100), dk(1, 4);
  int equal = 0, published_equal = 0, reductions = 0;
  for (int i = 0; i < 200; ++i) {
    if (i % 2 == 0) {
      // The closed-form r0 = (NR - R - 1)/2 is an integer for even N, odd R.
      const auto n = 2 * half(rng), r = 2 * half(rng) - 1;
      const auto p = plan_reduction(n, r, r);
      ++reductions;
      equal += counted_ratio(p) == reduction_ratio(n, r) && !p.r0_rounded;
      published_equal += counted_ratio(p) == reduction_ratio_published(n, r);
    } else {
      const auto n = dr(rng), r = dr(rng);
      const auto p = plan_expansion(n, r, dk(rng));
      equal += counted_ratio(p) == expansion_ratio(r);
      published_equal += counted_ratio(p) == expansion_ratio(r);
    }
  }
  const double lim_red = std::abs(to_double(reduction_ratio(1000000, 1000000)) - 2.0 / 3.0);
  const double lim_exp = std::abs(to_double(expansion_ratio(1000000)) - 1.0);
  bool pd_exact = true;
  for (std::int64_t r = 1; r <= 30; ++r) {
    pd_exact &= electronics_limited_throughput(plan_expansion(5, r, 1), 1e15, 45e6).detector_limited == 45e6;
  }
  return {equal == 200 && lim_red < 1e-5 && lim_exp < 1e-5 && pd_exact,
          fmt("closed form == count on %d/200 plans (printed reduction form with +1 matches %d/%d); "
              "|T/B - 2/3| = %.1e, |T/B - 1| = %.1e at 1e6; expansion detector limit == B_PD: %s",
              equal, published_equal - (200 - reductions), reductions, lim_red, lim_exp, pd_exact ? "yes" : "no")};
}

Verdict criterion6() {
  LinkBudget b;
  b.v_pi = 1e-3;
  b.r_in = 50.0;
  const double p = link_gain(b).p_nonlin_dbm;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  double quad = 0.0, comp = 0.0;
  for (int i = 0; i < 100; ++i) {
    LinkBudget x;
    x.r_pd = u(rng);
    x.p_ld = 0.01 * u(rng);
    x.v_pi = 5.0 * u(rng);
    x.gamma = 0.5 * u(rng);
    x.h_pd = u(rng);
    const double g = link_gain(x).gain;
    auto twice = x;
    twice.p_ld *= 2.0;
    quad = std::max(quad, std::abs(link_gain(twice).gain / g - 4.0) / 4.0);
    auto traded = x;
    traded.p_ld *= 4.0;
    traded.gamma /= 4.0;
    comp = std::max(comp, std::abs(link_gain(traded).gain / g - 1.0));
  }
  return {std::abs(p - (-47.0)) <= 0.1 && quad < 1e-14 && comp < 1e-14,
          fmt("P_nonlin(1 mV, 50 ohm) = %.3f dBm (target -47.0 +- 0.1); max rel deviation of G(2P)/G(P) from 4: "
              "%.1e; of G under P*gamma compensation: %.1e",
              p, quad, comp)};
}

Verdict criterion7() {
  const auto b = latency_from_hardware(30e9, 45e6, 1e9, 10.0);
  const double t = physical_latency(b);
  return {std::abs(t - 60e-9) <= 0.15 * 60e-9,
          fmt("%.2f ns = %.3f (MZM) + %.2f (PD) + %.2f (RF) + %.2f (10 m) ns (target 60 ns +- 15%%)", t * 1e9,
              b.tau_mzm * 1e9, b.tau_pd * 1e9, b.tau_rf * 1e9, b.tau_prop * 1e9)};
}

Verdict criterion8() {
  std::mt19937_64 rng(8);
  double worst = 0.0;
  std::size_t elements = 0;
  for (int draw = 0; draw < 100; ++draw) {
    // Random initial weights of the 8 -> 6 -> 4 network, sine second layer.
    const auto ex = builtin_example("toy-8-6-4", static_cast<std::uint64_t>(draw) + 1);
    std::vector<Sample> batch(4);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch[i].x = uniform(rng, 8, 0.0, 1.0);
      batch[i].label = static_cast<std::int64_t>(i);
    }
    std::vector<const Sample*> ptr;
    for (const auto& s : batch) ptr.push_back(&s);
    TrainConfig c;
    c.threads = 1;
    c.loss = draw % 2 == 0 ? LossKind::SoftmaxCrossEntropy : LossKind::MSE;
    const auto an = loss_and_gradients(ex.spec, ptr, c);
    c.gradient_mode = GradientMode::FiniteDifference;
    c.fd_step = 1e-5;
    const auto fd = loss_and_gradients(ex.spec, ptr, c);
    for (std::size_t j = 0; j < an.gradients.size(); ++j) {
      for (std::size_t i = 0; i < an.gradients[j].data.size(); ++i) {
        const double a = an.gradients[j].data[i], f = fd.gradients[j].data[i];
        worst = std::max(worst, std::abs(a - f) / std::abs(f));
        ++elements;
      }
    }
  }
  return {worst < 1e-5,
          fmt("max elementwise rel err %.2e over %zu gradient entries from 100 draws (limit 1e-5, step 1e-5)", worst,
              elements)};
}

Verdict criterion9() {
  const auto train_set = load_dataset_csv("data/mnist7x7_train.csv");
  const auto test_set = load_dataset_csv("data/mnist7x7_test.csv");
  TrainConfig c;
  c.learning_rate = 0.1;
  c.epochs = 10;
  c.batch_size = 16;
  c.seed = 0;
  auto run = [&](const char* name, double& secs) {
    const auto t0 = Clock::now();
    const auto r = train(builtin_example(name, 0).spec, train_set, c, &test_set, [&](const EpochRecord& h) {
      std::fprintf(stderr, "  %s epoch %d: loss %.4f, train %.3f, test %.3f\n", name, h.epoch, h.loss,
                   h.train_accuracy, h.test_accuracy);
    });
    secs = seconds_since(t0);
    return r.diverged ? -1.0 : r.history.back().test_accuracy;
  };
  double t_out = 0.0, t_rand = 0.0;
  const double acc_out = run("mnist7x7", t_out);
  const double acc_rand = run("mnist7x7-random-band", t_rand);
  return {acc_out >= 0.85 && t_out < 600.0 && acc_rand < acc_out,
          fmt("49-32-16-10 test accuracy %.3f in %.0f s (limits 0.85, 600 s); random band %.3f in %.0f s, "
              "expected below the output band",
              acc_out, t_out, acc_rand, t_rand)};
}

Verdict criterion10() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> c0(-0.5, 0.5), c1(0.5, 2.0), c2(0.5, 3.0), c3(0.0, 2.0 * std::numbers::pi);
  const MultiToneSignal drive(FrequencyGrid(Rational(1000000), 64),
                              {{1, Complex(0.5, 0.1)}, {2, Complex(-0.3, 0.2)}, {3, Complex(0.2, -0.25)}});
  std::vector<double> scales;
  for (int i = 1; i <= 16; ++i) scales.push_back(0.1 * i);
  double worst = 0.0;
  int unflagged = 0;
  for (int t = 0; t < 50; ++t) {
    const NonlinearityParams truth{c0(rng), c1(rng), c2(rng), c3(rng), 1.0};
    const auto f = fit_nonlinearity(synthesize_nonlinear_data(drive, truth, scales));
    unflagged += f.identifiable && f.converged;
    double ph = std::fmod(std::abs(f.params[3] - truth.chi3), 2.0 * std::numbers::pi);
    ph = std::min(ph, 2.0 * std::numbers::pi - ph);
    worst = std::max({worst, std::abs(f.params[0] - truth.chi0) / std::abs(truth.chi0),
                      std::abs(f.params[1] - truth.chi1) / truth.chi1, std::abs(f.params[2] - truth.chi2) / truth.chi2,
                      ph / truth.chi3});
  }
  return {worst < 1e-6 && unflagged == 50,
          fmt("max rel err %.2e over chi0..chi3 in 50 random draws (limit 1e-6); %d/50 converged and identifiable",
              worst, unflagged)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9, criterion10};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("criterion %d: %s  %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
