// SPDX-License-Identifier: Apache-2.0
//
// Thin FFTW wrapper. Plans are created once per size under a lock and then
// executed concurrently with the new-array interface.

#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace maft::detail {

class FftPlan {
 public:
  static const FftPlan& get(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  /// In place, X[k] = sum_m x[m] exp(-i 2 pi k m / n).
  void forward(std::span<std::complex<double>> data) const;
  /// In place, unnormalized, x[m] = sum_k X[k] exp(+i 2 pi k m / n).
  void backward(std::span<std::complex<double>> data) const;

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan();

 private:
  explicit FftPlan(std::size_t n);
  std::size_t n_;
  void* forward_;
  void* backward_;
};

}  // namespace maft::detail
