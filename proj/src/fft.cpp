// SPDX-License-Identifier: Apache-2.0
#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "maft/error.hpp"

namespace maft::detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
  std::vector<std::complex<double>> scratch(n);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, flags);
  backward_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, flags);
  if (!forward_ || !backward_) fail(ErrorCode::Numerical, "FFTW planning failed");
}

FftPlan::~FftPlan() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_));
}

const FftPlan& FftPlan::get(std::size_t n) {
  // The mutex must outlive the cache, so it is constructed first.
  std::lock_guard lock(planner_mutex());
  static std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, std::unique_ptr<FftPlan>(new FftPlan(n))).first;
  }
  return *it->second;
}

void FftPlan::forward(std::span<std::complex<double>> data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(forward_), p, p);
}

void FftPlan::backward(std::span<std::complex<double>> data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(backward_), p, p);
}

}  // namespace maft::detail
