// SPDX-License-Identifier: Apache-2.0
//
// Frequency plans for one layer and the MAFT mapping of vectors and weight
// matrices onto tones. All positions are integer indices on a grid whose
// spacing is `LayerPlan::base_spacing`.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "maft/spectral.hpp"

namespace maft {

enum class Scheme { Reduction, Expansion, Custom };

const char* to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

struct FilterPolicy {
  enum class Kind { KeepSpurious, BandpassIdeal, CombIdeal };

  Kind kind = Kind::KeepSpurious;
  std::int64_t lo = 0;  // bandpass edges; for the comb an optional limit (0 = open)
  std::int64_t hi = 0;
  std::int64_t period = 0;
  double attenuation = 0.0;  // applied to rejected tones and to DC

  static FilterPolicy keep() { return {}; }
  static FilterPolicy bandpass(std::int64_t lo, std::int64_t hi, double attenuation = 0.0);
  static FilterPolicy comb(std::int64_t period, std::int64_t lo = 0, std::int64_t hi = 0,
                           double attenuation = 0.0);

  /// Multiplier for tone index k (k = 0 is DC).
  double response(std::int64_t k) const;
};

/// Row-major dense matrix of doubles.
struct Matrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::int64_t r, std::int64_t c, double fill = 0.0);
  Matrix(std::int64_t r, std::int64_t c, std::vector<double> values);

  double& operator()(std::int64_t r, std::int64_t c) { return data[static_cast<std::size_t>(r * cols + c)]; }
  double operator()(std::int64_t r, std::int64_t c) const {
    return data[static_cast<std::size_t>(r * cols + c)];
  }
  std::vector<double> apply(const std::vector<double>& x) const;
};

struct LayerPlan {
  Rational base_spacing{1};
  std::int64_t n_inputs = 1;        // N
  std::int64_t n_outputs = 1;       // R
  std::int64_t input_spacing = 1;   // df_X in grid units
  std::int64_t output_spacing = 1;  // df_Y in grid units
  std::int64_t input_offset = 0;    // n0
  std::int64_t output_offset = 0;   // r0
  Scheme scheme = Scheme::Custom;
  FilterPolicy filter;
  double sync_delay = 0.0;  // seconds
  /// Custom plans only: explicit weight tone indices, R*N row-major. Empty
  /// means the standard layout (r0 + r) df_Y + (n0 + n) df_X.
  std::vector<std::int64_t> weight_indices;
  /// Set when the planner had to round a fractional closed-form r0 up.
  bool r0_rounded = false;

  /// 1-based n and r, as in the usual notation.
  std::int64_t input_index(std::int64_t n) const { return (input_offset + n) * input_spacing; }
  std::int64_t output_index(std::int64_t r) const { return (output_offset + r) * output_spacing; }
  std::int64_t weight_index(std::int64_t r, std::int64_t n) const;

  std::int64_t max_input_index() const { return input_index(n_inputs); }
  std::int64_t max_weight_index() const;
};

/// Throws Error(Validation) naming the first violated condition.
void validate_plan(const LayerPlan& plan);

LayerPlan plan_reduction(std::int64_t n, std::int64_t r, std::int64_t input_spacing,
                         std::int64_t n0 = 0, Rational base_spacing = Rational(1));
LayerPlan plan_expansion(std::int64_t n, std::int64_t r, std::int64_t input_spacing,
                         std::int64_t n0 = 0, Rational base_spacing = Rational(1));
/// Plan with caller-chosen df_Y and r0. Validated by enumeration unless
/// `validate` is false (used to build deliberately broken plans in tests).
LayerPlan plan_custom(std::int64_t n, std::int64_t r, std::int64_t input_spacing,
                      std::int64_t output_spacing, std::int64_t n0, std::int64_t r0,
                      Rational base_spacing = Rational(1), bool validate = true);

/// Smallest grid on which every input, weight and product tone of the plan is
/// representable. `dual_sideband` doubles the reach for sum-frequency terms.
FrequencyGrid plan_grid(const LayerPlan& plan, int oversample = 4, bool dual_sideband = false);

struct ProductTerm {
  std::int64_t r = 0;       // weight row, 1-based
  std::int64_t n_w = 0;     // weight column, 1-based
  std::int64_t n_x = 0;     // input entry, 1-based
  std::int64_t index = 0;   // |k_w - k_x|
  int sign = 1;             // -1 when the difference was negative and folded
};

struct ProductEnumeration {
  /// Per row: the common index of its diagonal products, or -1 when they
  /// do not coincide (only possible for explicit custom layouts).
  std::vector<std::int64_t> row_output;
  std::vector<std::int64_t> output_set;    // sorted, unique
  std::vector<std::int64_t> spurious_set;  // sorted, unique; may contain 0 (DC)
  std::vector<ProductTerm> collisions;     // spurious terms on an output index
  std::int64_t total_terms = 0;            // R * N * N
  std::vector<ProductTerm> terms;          // filled only when requested
};

ProductEnumeration enumerate_products(const LayerPlan& plan, bool keep_terms = false);

struct PlanMargin {
  std::string condition;  // human-readable inequality
  Rational lhs;
  Rational rhs;
  bool holds = false;
};

/// The two gap conditions of the plan's scheme (empty for custom plans),
/// evaluated exactly in Hz.
std::vector<PlanMargin> plan_margins(const LayerPlan& plan);
std::string plan_margins_text(const LayerPlan& plan);
std::string enumeration_csv(const LayerPlan& plan);

std::string plan_to_json(const LayerPlan& plan);
LayerPlan plan_from_json(std::string_view json);

MultiToneSignal encode_vector(const std::vector<double>& x, std::int64_t input_spacing,
                              std::int64_t n0, const FrequencyGrid& grid);
MultiToneSignal encode_input(const LayerPlan& plan, const std::vector<double>& x,
                             const FrequencyGrid& grid);
MultiToneSignal weight_frequencies(const LayerPlan& plan, const Matrix& w, const FrequencyGrid& grid);

struct ToneCorrection {
  std::map<std::int64_t, double> gains;
};

MultiToneSignal apply_corrections(const MultiToneSignal& signal, const ToneCorrection& correction,
                                  bool strict = false);

/// Scales the signal so that its continuous-time peak |value| over one period
/// is 1. Returns the scaled signal and the factor that was applied.
std::pair<MultiToneSignal, double> normalize_peak(const MultiToneSignal& signal);

/// Continuous-time peak |value| of the signal over one period.
double signal_peak(const MultiToneSignal& signal);

}  // namespace maft
