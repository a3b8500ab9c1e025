// SPDX-License-Identifier: Apache-2.0
#include "maft/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "json_util.hpp"
#include "maft/error.hpp"

namespace maft {

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Reduction: return "reduction";
    case Scheme::Expansion: return "expansion";
    case Scheme::Custom: return "custom";
  }
  return "custom";
}

Scheme scheme_from_string(std::string_view s) {
  if (s == "reduction") return Scheme::Reduction;
  if (s == "expansion") return Scheme::Expansion;
  if (s == "custom") return Scheme::Custom;
  fail(ErrorCode::InvalidArgument, "unknown scheme '" + std::string(s) + "'");
}

FilterPolicy FilterPolicy::bandpass(std::int64_t lo, std::int64_t hi, double attenuation) {
  require(lo <= hi, ErrorCode::InvalidArgument, "bandpass filter needs lo <= hi");
  require(attenuation >= 0.0 && std::isfinite(attenuation), ErrorCode::InvalidArgument,
          "stopband attenuation must be finite and non-negative");
  FilterPolicy f;
  f.kind = Kind::BandpassIdeal;
  f.lo = lo;
  f.hi = hi;
  f.attenuation = attenuation;
  return f;
}

FilterPolicy FilterPolicy::comb(std::int64_t period, std::int64_t lo, std::int64_t hi, double attenuation) {
  require(period >= 1, ErrorCode::InvalidArgument, "comb period must be >= 1");
  require(hi == 0 || lo <= hi, ErrorCode::InvalidArgument, "comb limits need lo <= hi");
  require(attenuation >= 0.0 && std::isfinite(attenuation), ErrorCode::InvalidArgument,
          "stopband attenuation must be finite and non-negative");
  FilterPolicy f;
  f.kind = Kind::CombIdeal;
  f.period = period;
  f.lo = lo;
  f.hi = hi;
  f.attenuation = attenuation;
  return f;
}

double FilterPolicy::response(std::int64_t k) const {
  switch (kind) {
    case Kind::KeepSpurious:
      return 1.0;
    case Kind::BandpassIdeal:
      return (k >= lo && k <= hi && k > 0) ? 1.0 : attenuation;
    case Kind::CombIdeal: {
      if (k <= 0 || k % period != 0) return attenuation;
      if (k < lo || (hi > 0 && k > hi)) return attenuation;
      return 1.0;
    }
  }
  return 1.0;
}

Matrix::Matrix(std::int64_t r, std::int64_t c, double fill)
    : rows(r), cols(c), data(static_cast<std::size_t>(r * c), fill) {
  require(r >= 0 && c >= 0, ErrorCode::InvalidArgument, "negative matrix shape");
}

Matrix::Matrix(std::int64_t r, std::int64_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  require(r >= 0 && c >= 0 && static_cast<std::int64_t>(data.size()) == r * c, ErrorCode::InvalidArgument,
          "matrix data size does not match its shape");
}

std::vector<double> Matrix::apply(const std::vector<double>& x) const {
  require(static_cast<std::int64_t>(x.size()) == cols, ErrorCode::InvalidArgument,
          "matrix-vector shape mismatch");
  std::vector<double> y(static_cast<std::size_t>(rows), 0.0);
  for (std::int64_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::int64_t c = 0; c < cols; ++c) acc += (*this)(r, c) * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = acc;
  }
  return y;
}

// ---------------------------------------------------------------------------

std::int64_t LayerPlan::weight_index(std::int64_t r, std::int64_t n) const {
  if (!weight_indices.empty()) {
    return weight_indices[static_cast<std::size_t>((r - 1) * n_inputs + (n - 1))];
  }
  return output_index(r) + input_index(n);
}

std::int64_t LayerPlan::max_weight_index() const {
  if (!weight_indices.empty()) return *std::max_element(weight_indices.begin(), weight_indices.end());
  return weight_index(n_outputs, n_inputs);
}

namespace {

void check_shape(const LayerPlan& p) {
  require(p.base_spacing > 0, ErrorCode::InvalidArgument, "base spacing must be positive");
  require(p.n_inputs >= 1 && p.n_outputs >= 1, ErrorCode::InvalidArgument, "N and R must be >= 1");
  require(p.input_spacing >= 1 && p.output_spacing >= 1, ErrorCode::InvalidArgument,
          "tone spacings must be >= 1 grid unit");
  require(p.input_offset >= 0 && p.output_offset >= 0, ErrorCode::InvalidArgument,
          "offsets n0 and r0 must be >= 0");
  require(std::isfinite(p.sync_delay), ErrorCode::InvalidArgument, "sync delay must be finite");
  if (!p.weight_indices.empty()) {
    require(p.scheme == Scheme::Custom, ErrorCode::InvalidArgument,
            "explicit weight indices are only allowed for custom plans");
    require(static_cast<std::int64_t>(p.weight_indices.size()) == p.n_inputs * p.n_outputs,
            ErrorCode::InvalidArgument, "weight_indices must hold R*N entries");
  }
}

void check_distinct_positive(const LayerPlan& p) {
  std::vector<std::int64_t> w;
  w.reserve(static_cast<std::size_t>(p.n_inputs * p.n_outputs));
  for (std::int64_t r = 1; r <= p.n_outputs; ++r) {
    for (std::int64_t n = 1; n <= p.n_inputs; ++n) w.push_back(p.weight_index(r, n));
  }
  std::sort(w.begin(), w.end());
  if (w.front() <= 0) fail(ErrorCode::Validation, "weight tone indices must be positive");
  if (std::adjacent_find(w.begin(), w.end()) != w.end()) {
    fail(ErrorCode::Validation, "two weight tones share a frequency");
  }
}

}  // namespace

std::vector<PlanMargin> plan_margins(const LayerPlan& p) {
  const Rational dfx = p.base_spacing * p.input_spacing;
  const Rational dfy = p.base_spacing * p.output_spacing;
  const auto N = p.n_inputs;
  const auto R = p.n_outputs;
  const auto r0 = p.output_offset;
  std::vector<PlanMargin> out;
  auto add = [&](std::string cond, Rational lhs, Rational rhs) {
    out.push_back({std::move(cond), lhs, rhs, lhs > rhs});
  };
  if (p.scheme == Scheme::Reduction) {
    add("df_X > (R-1)*df_Y", dfx, dfy * (R - 1));
    add("(r0+1)*df_Y > (N-1)*df_X/2", dfy * (r0 + 1), dfx * (N - 1) / 2);
  } else if (p.scheme == Scheme::Expansion) {
    add("df_Y > (N-1)*df_X", dfy, dfx * (N - 1));
    add("(r0+1)*df_Y > (N-1)*df_X/2", dfy * (r0 + 1), dfx * (N - 1) / 2);
  }
  return out;
}

void validate_plan(const LayerPlan& p) {
  check_shape(p);
  check_distinct_positive(p);
  for (const auto& m : plan_margins(p)) {
    if (!m.holds) {
      fail(ErrorCode::Validation, std::string("anti-aliasing condition violated: ") + m.condition + " (" +
                                      to_string(m.lhs) + " Hz vs " + to_string(m.rhs) + " Hz)");
    }
  }
  if (p.scheme == Scheme::Custom) {
    const auto e = enumerate_products(p);
    if (!e.collisions.empty()) {
      const auto& c = e.collisions.front();
      fail(ErrorCode::Validation, "spurious product W[" + std::to_string(c.r) + "," + std::to_string(c.n_w) +
                                      "]*X[" + std::to_string(c.n_x) + "] lands on output index " +
                                      std::to_string(c.index) + " (" + std::to_string(e.collisions.size()) +
                                      " collisions)");
    }
  }
}

LayerPlan plan_reduction(std::int64_t n, std::int64_t r, std::int64_t input_spacing, std::int64_t n0,
                         Rational base_spacing) {
  require(n >= 1 && r >= 1, ErrorCode::InvalidArgument, "N and R must be >= 1");
  require(input_spacing >= 1, ErrorCode::InvalidArgument, "input spacing must be >= 1");
  if (input_spacing % r != 0) {
    fail(ErrorCode::InvalidArgument, "reduction needs df_X divisible by R (df_X = " +
                                         std::to_string(input_spacing) + ", R = " + std::to_string(r) + ")");
  }
  LayerPlan p;
  p.base_spacing = base_spacing;
  p.n_inputs = n;
  p.n_outputs = r;
  p.input_spacing = input_spacing;
  p.output_spacing = input_spacing / r;
  p.input_offset = n0;
  p.scheme = Scheme::Reduction;
  // Closed form in units of df_Y: r0 = (N R - R - 1) / 2.
  const std::int64_t twice = n * r - r - 1;
  std::int64_t r0 = twice <= 0 ? 0 : (twice + 1) / 2;
  p.r0_rounded = twice > 0 && twice % 2 != 0;
  p.output_offset = r0;
  for (auto m = plan_margins(p); !m[1].holds; m = plan_margins(p)) ++p.output_offset;
  validate_plan(p);
  return p;
}

LayerPlan plan_expansion(std::int64_t n, std::int64_t r, std::int64_t input_spacing, std::int64_t n0,
                         Rational base_spacing) {
  require(n >= 1 && r >= 1, ErrorCode::InvalidArgument, "N and R must be >= 1");
  require(input_spacing >= 1, ErrorCode::InvalidArgument, "input spacing must be >= 1");
  LayerPlan p;
  p.base_spacing = base_spacing;
  p.n_inputs = n;
  p.n_outputs = r;
  p.input_spacing = input_spacing;
  p.output_spacing = n * input_spacing;
  p.input_offset = n0;
  p.output_offset = 0;
  p.scheme = Scheme::Expansion;
  validate_plan(p);
  return p;
}

LayerPlan plan_custom(std::int64_t n, std::int64_t r, std::int64_t input_spacing, std::int64_t output_spacing,
                      std::int64_t n0, std::int64_t r0, Rational base_spacing, bool validate) {
  LayerPlan p;
  p.base_spacing = base_spacing;
  p.n_inputs = n;
  p.n_outputs = r;
  p.input_spacing = input_spacing;
  p.output_spacing = output_spacing;
  p.input_offset = n0;
  p.output_offset = r0;
  p.scheme = Scheme::Custom;
  if (validate) {
    validate_plan(p);
  } else {
    check_shape(p);
  }
  return p;
}

FrequencyGrid plan_grid(const LayerPlan& plan, int oversample, bool dual_sideband) {
  std::int64_t kmax = std::max(plan.max_weight_index(), plan.max_input_index());
  if (dual_sideband) kmax = plan.max_weight_index() + plan.max_input_index();
  return grid_for_max_index(plan.base_spacing, kmax, oversample);
}

// ---------------------------------------------------------------------------

ProductEnumeration enumerate_products(const LayerPlan& plan, bool keep_terms) {
  check_shape(plan);
  const auto N = plan.n_inputs;
  const auto R = plan.n_outputs;
  ProductEnumeration e;
  e.total_terms = R * N * N;
  e.row_output.assign(static_cast<std::size_t>(R), -1);

  auto term = [&](std::int64_t r, std::int64_t nw, std::int64_t nx) {
    const std::int64_t d = plan.weight_index(r, nw) - plan.input_index(nx);
    return ProductTerm{r, nw, nx, d < 0 ? -d : d, d < 0 ? -1 : 1};
  };

  // Diagonal products (n_w == n_x) define the output of each row, provided
  // they all land on one index with the same sign.
  for (std::int64_t r = 1; r <= R; ++r) {
    const auto first = term(r, 1, 1);
    bool common = first.index > 0;
    for (std::int64_t n = 2; n <= N && common; ++n) {
      const auto t = term(r, n, n);
      common = t.index == first.index && t.sign == first.sign;
    }
    if (common) {
      e.row_output[static_cast<std::size_t>(r - 1)] = first.index;
      e.output_set.push_back(first.index);
    }
  }
  std::sort(e.output_set.begin(), e.output_set.end());
  e.output_set.erase(std::unique(e.output_set.begin(), e.output_set.end()), e.output_set.end());

  std::vector<std::int64_t> spurious;
  spurious.reserve(static_cast<std::size_t>(R * N * (N - 1) + R * N));
  for (std::int64_t r = 1; r <= R; ++r) {
    const bool row_is_output = e.row_output[static_cast<std::size_t>(r - 1)] >= 0;
    for (std::int64_t nw = 1; nw <= N; ++nw) {
      for (std::int64_t nx = 1; nx <= N; ++nx) {
        const auto t = term(r, nw, nx);
        if (keep_terms) e.terms.push_back(t);
        if (row_is_output && nw == nx) continue;
        spurious.push_back(t.index);
        if (std::binary_search(e.output_set.begin(), e.output_set.end(), t.index)) e.collisions.push_back(t);
      }
    }
  }
  std::sort(spurious.begin(), spurious.end());
  spurious.erase(std::unique(spurious.begin(), spurious.end()), spurious.end());
  e.spurious_set = std::move(spurious);
  return e;
}

std::string plan_margins_text(const LayerPlan& plan) {
  std::ostringstream os;
  os << to_string(plan.scheme) << " plan: N=" << plan.n_inputs << " R=" << plan.n_outputs
     << " df_X=" << to_string(plan.base_spacing * plan.input_spacing)
     << " Hz df_Y=" << to_string(plan.base_spacing * plan.output_spacing) << " Hz n0=" << plan.input_offset
     << " r0=" << plan.output_offset << '\n';
  if (plan.r0_rounded) os << "note: closed-form r0 was fractional and has been rounded up\n";
  const auto margins = plan_margins(plan);
  for (const auto& m : margins) {
    os << (m.holds ? "ok   " : "FAIL ") << m.condition << ": " << to_string(m.lhs) << " Hz vs "
       << to_string(m.rhs) << " Hz, margin " << to_string(m.lhs - m.rhs) << " Hz\n";
  }
  const auto e = enumerate_products(plan);
  os << "products: " << e.total_terms << " terms, " << e.output_set.size() << " output tones, "
     << e.spurious_set.size() << " distinct spurious tones, " << e.collisions.size() << " collisions\n";
  return os.str();
}

std::string enumeration_csv(const LayerPlan& plan) {
  const auto e = enumerate_products(plan, true);
  std::ostringstream os;
  os.precision(17);
  os << "r,n_w,n_x,weight_index,input_index,product_index,sign,kind,freq_hz\n";
  for (const auto& t : e.terms) {
    const bool out = e.row_output[static_cast<std::size_t>(t.r - 1)] >= 0 && t.n_w == t.n_x;
    const bool hit = !out && std::binary_search(e.output_set.begin(), e.output_set.end(), t.index);
    os << t.r << ',' << t.n_w << ',' << t.n_x << ',' << plan.weight_index(t.r, t.n_w) << ','
       << plan.input_index(t.n_x) << ',' << t.index << ',' << t.sign << ','
       << (out ? "output" : (hit ? "collision" : "spurious")) << ','
       << to_double(plan.base_spacing * t.index) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

namespace detail {

json rational_json(const Rational& r) { return json::array({r.numerator(), r.denominator()}); }

Rational rational_from(const json& j) {
  if (j.is_array()) return Rational(j.at(0).get<std::int64_t>(), j.at(1).get<std::int64_t>());
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << j.get<double>();
    return parse_rational(os.str());
  }
  fail(ErrorCode::InvalidArgument, "expected a rational as [num, den], a string or a number");
}

namespace {
const char* filter_kind_name(FilterPolicy::Kind k) {
  switch (k) {
    case FilterPolicy::Kind::KeepSpurious: return "keep";
    case FilterPolicy::Kind::BandpassIdeal: return "bandpass";
    case FilterPolicy::Kind::CombIdeal: return "comb";
  }
  return "keep";
}
}  // namespace

json plan_json(const LayerPlan& p) {
  json j;
  j["base_spacing_hz"] = rational_json(p.base_spacing);
  j["scheme"] = to_string(p.scheme);
  j["n_inputs"] = p.n_inputs;
  j["n_outputs"] = p.n_outputs;
  j["input_spacing"] = p.input_spacing;
  j["output_spacing"] = p.output_spacing;
  j["input_offset"] = p.input_offset;
  j["output_offset"] = p.output_offset;
  j["r0_rounded"] = p.r0_rounded;
  j["sync_delay_s"] = p.sync_delay;
  json f;
  f["kind"] = filter_kind_name(p.filter.kind);
  if (p.filter.kind != FilterPolicy::Kind::KeepSpurious) {
    f["lo"] = p.filter.lo;
    f["hi"] = p.filter.hi;
    f["attenuation"] = p.filter.attenuation;
    if (p.filter.kind == FilterPolicy::Kind::CombIdeal) f["period"] = p.filter.period;
  }
  j["filter"] = f;
  if (!p.weight_indices.empty()) j["weight_indices"] = p.weight_indices;
  return j;
}

LayerPlan plan_from(const json& j) {
  LayerPlan p;
  p.base_spacing = j.contains("base_spacing_hz") ? rational_from(j["base_spacing_hz"]) : Rational(1);
  p.scheme = scheme_from_string(j.value("scheme", std::string("custom")));
  p.n_inputs = j.at("n_inputs").get<std::int64_t>();
  p.n_outputs = j.at("n_outputs").get<std::int64_t>();
  p.input_spacing = j.at("input_spacing").get<std::int64_t>();
  p.output_spacing = j.at("output_spacing").get<std::int64_t>();
  p.input_offset = j.value("input_offset", std::int64_t{0});
  p.output_offset = j.value("output_offset", std::int64_t{0});
  p.r0_rounded = j.value("r0_rounded", false);
  p.sync_delay = j.value("sync_delay_s", 0.0);
  if (j.contains("filter")) {
    const auto& f = j["filter"];
    const auto kind = f.value("kind", std::string("keep"));
    if (kind == "keep") {
      p.filter = FilterPolicy::keep();
    } else if (kind == "bandpass") {
      p.filter = FilterPolicy::bandpass(f.at("lo").get<std::int64_t>(), f.at("hi").get<std::int64_t>(),
                                        f.value("attenuation", 0.0));
    } else if (kind == "comb") {
      p.filter = FilterPolicy::comb(f.at("period").get<std::int64_t>(), f.value("lo", std::int64_t{0}),
                                    f.value("hi", std::int64_t{0}), f.value("attenuation", 0.0));
    } else {
      fail(ErrorCode::InvalidArgument, "unknown filter kind '" + kind + "'");
    }
  }
  if (j.contains("weight_indices")) p.weight_indices = j["weight_indices"].get<std::vector<std::int64_t>>();
  validate_plan(p);
  return p;
}

}  // namespace detail

std::string plan_to_json(const LayerPlan& plan) { return detail::plan_json(plan).dump(2); }

LayerPlan plan_from_json(std::string_view text) {
  return detail::guarded_parse("plan JSON", [&] { return detail::plan_from(detail::json::parse(text)); });
}

// ---------------------------------------------------------------------------

MultiToneSignal encode_vector(const std::vector<double>& x, std::int64_t input_spacing, std::int64_t n0,
                              const FrequencyGrid& grid) {
  require(!x.empty(), ErrorCode::InvalidArgument, "cannot encode an empty vector");
  require(input_spacing >= 1 && n0 >= 0, ErrorCode::InvalidArgument, "bad input spacing or offset");
  MultiToneSignal::ToneMap tones;
  for (std::size_t n = 0; n < x.size(); ++n) {
    require(std::isfinite(x[n]), ErrorCode::InvalidArgument, "non-finite input value");
    if (x[n] != 0.0) {
      tones.emplace_hint(tones.end(), (n0 + static_cast<std::int64_t>(n) + 1) * input_spacing, Complex(x[n], 0.0));
    }
  }
  return MultiToneSignal(grid, std::move(tones));
}

MultiToneSignal encode_input(const LayerPlan& plan, const std::vector<double>& x, const FrequencyGrid& grid) {
  require(static_cast<std::int64_t>(x.size()) == plan.n_inputs, ErrorCode::InvalidArgument,
          "input length " + std::to_string(x.size()) + " does not match plan N = " + std::to_string(plan.n_inputs));
  require(grid.base_spacing() == plan.base_spacing, ErrorCode::Validation, "grid spacing differs from the plan");
  return encode_vector(x, plan.input_spacing, plan.input_offset, grid);
}

MultiToneSignal weight_frequencies(const LayerPlan& plan, const Matrix& w, const FrequencyGrid& grid) {
  require(w.rows == plan.n_outputs && w.cols == plan.n_inputs, ErrorCode::InvalidArgument,
          "weight matrix is " + std::to_string(w.rows) + "x" + std::to_string(w.cols) + ", plan expects " +
              std::to_string(plan.n_outputs) + "x" + std::to_string(plan.n_inputs));
  require(grid.base_spacing() == plan.base_spacing, ErrorCode::Validation, "grid spacing differs from the plan");
  MultiToneSignal::ToneMap tones;
  for (std::int64_t r = 1; r <= plan.n_outputs; ++r) {
    for (std::int64_t n = 1; n <= plan.n_inputs; ++n) {
      const double v = w(r - 1, n - 1);
      require(std::isfinite(v), ErrorCode::InvalidArgument, "non-finite weight");
      if (v == 0.0) continue;
      const bool inserted = tones.emplace(plan.weight_index(r, n), Complex(v, 0.0)).second;
      if (!inserted) fail(ErrorCode::Validation, "weight tone collision (invalid plan)");
    }
  }
  return MultiToneSignal(grid, std::move(tones));
}

MultiToneSignal apply_corrections(const MultiToneSignal& signal, const ToneCorrection& correction, bool strict) {
  for (const auto& [k, g] : correction.gains) {
    require(std::isfinite(g) && g > 0.0, ErrorCode::InvalidArgument,
            "correction gain at index " + std::to_string(k) + " must be positive and finite");
  }
  MultiToneSignal::ToneMap out;
  for (const auto& [k, c] : signal.tones()) {
    auto it = correction.gains.find(k);
    if (it == correction.gains.end()) {
      if (strict) fail(ErrorCode::InvalidArgument, "no correction for tone index " + std::to_string(k));
      out.emplace_hint(out.end(), k, c);
    } else {
      out.emplace_hint(out.end(), k, c * it->second);
    }
  }
  return MultiToneSignal(signal.grid(), std::move(out), signal.dc());
}

double signal_peak(const MultiToneSignal& signal) {
  // Locate candidates on a finely sampled period, then polish each one with a
  // bracketed 1-D maximization of the exact trig sum.
  const auto kmax = std::max<std::int64_t>(signal.max_index(), 1);
  const auto fine = next_smooth_size(std::max<std::int64_t>(16 * kmax, signal.grid().period_samples()));
  const FrequencyGrid g(signal.grid().base_spacing(), fine);
  const MultiToneSignal s(g, signal.tones(), signal.dc());
  const auto wave = synthesize(s);
  const auto& v = wave.samples;
  const auto P = static_cast<std::int64_t>(v.size());
  double best_sample = 0.0;
  for (double x : v) best_sample = std::max(best_sample, std::abs(x));
  if (best_sample == 0.0) return 0.0;

  const double T = g.period_seconds();
  const double dt = T / static_cast<double>(P);
  double peak = best_sample;
  for (std::int64_t m = 0; m < P; ++m) {
    const double a = std::abs(v[static_cast<std::size_t>(m)]);
    const double prev = std::abs(v[static_cast<std::size_t>((m + P - 1) % P)]);
    const double next = std::abs(v[static_cast<std::size_t>((m + 1) % P)]);
    if (a < 0.9 * best_sample || a < prev || a < next) continue;
    const double t0 = static_cast<double>(m) * dt;
    auto neg = [&](double t) { return -std::abs(evaluate(s, t)); };
    const auto [t, f] = boost::math::tools::brent_find_minima(neg, t0 - dt, t0 + dt, 40);
    peak = std::max(peak, -f);
  }
  return peak;
}

std::pair<MultiToneSignal, double> normalize_peak(const MultiToneSignal& signal) {
  require(!signal.empty() || signal.dc() != 0.0, ErrorCode::InvalidArgument, "cannot normalize an all-zero signal");
  const double peak = signal_peak(signal);
  require(peak > 0.0, ErrorCode::InvalidArgument, "cannot normalize an all-zero signal");
  const double scale = 1.0 / peak;
  return {signal.scaled(scale), scale};
}

}  // namespace maft
