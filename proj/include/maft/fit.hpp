// SPDX-License-Identifier: Apache-2.0
//
// Characterization fits: the single scale factor of the linear product and
// the four parameters of the sine modulator transfer
//   f(V) = chi0 + chi1 sin(chi2 V + chi3).

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maft/encoding.hpp"
#include "maft/photonic.hpp"
#include "maft/spectral.hpp"

namespace maft {

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> std_errors;  // one standard deviation
  double residual_rms = 0.0;
  int iterations = 0;
  bool converged = true;
  bool identifiable = true;
  std::string warning;
};

struct LinearSample {
  std::vector<double> x;
  Matrix w;
  std::vector<double> y;  // measured outputs
};

/// Least-squares c in y = c (W x).
FitResult fit_linear_scale(std::span<const LinearSample> samples);

/// One drive amplitude and the measured output: DC plus complex coefficients
/// at the problem's probe indices.
struct NonlinearSample {
  double scale = 1.0;
  double dc = 0.0;
  std::vector<Complex> tones;
};

struct NonlinearFitProblem {
  MultiToneSignal drive;  // unit-scale drive voltage
  std::vector<std::int64_t> probe_indices;
  std::vector<NonlinearSample> samples;
};

struct NonlinearFitOptions {
  int max_iterations = 200;
  double condition_limit = 1e6;  // of the column-scaled Jacobian
};

/// Nonlinear least squares over (chi0, chi1, chi2, chi3), canonicalized to
/// chi1 > 0, chi2 > 0, chi3 in [0, 2 pi).
FitResult fit_nonlinearity(const NonlinearFitProblem& problem, const NonlinearFitOptions& options = {});

/// Default probes: every drive tone plus the second harmonic of the lowest.
std::vector<std::int64_t> default_probe_indices(const MultiToneSignal& drive);

/// Synthetic measurements through the modulator model for each drive scale.
NonlinearFitProblem synthesize_nonlinear_data(const MultiToneSignal& drive, const NonlinearityParams& truth,
                                              std::span<const double> scales,
                                              std::vector<std::int64_t> probe_indices = {}, double noise_sigma = 0.0,
                                              std::uint64_t seed = 0);

std::string fit_result_to_json(const FitResult& r);
std::string nonlinear_problem_to_json(const NonlinearFitProblem& p);
NonlinearFitProblem nonlinear_problem_from_json(std::string_view json);
std::string linear_samples_to_json(std::span<const LinearSample> samples);
std::vector<LinearSample> linear_samples_from_json(std::string_view json);

}  // namespace maft
