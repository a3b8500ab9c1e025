// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace maft::detail {

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
// exception.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto t = static_cast<std::size_t>(std::max(1, threads));
  if (t == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::thread> pool;
  const auto workers = std::min(t, n);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Pairwise sum of items[lo, hi) into items[lo].
template <class T, class Add>
void tree_reduce(std::vector<T>& items, std::size_t lo, std::size_t hi, const Add& add) {
  if (hi - lo <= 1) return;
  const auto mid = lo + (hi - lo) / 2;
  tree_reduce(items, lo, mid, add);
  tree_reduce(items, mid, hi, add);
  add(items[lo], items[mid]);
}

}  // namespace maft::detail
