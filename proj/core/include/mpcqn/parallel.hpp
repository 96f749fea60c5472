// SPDX-License-Identifier: MIT
/// \file parallel.hpp
/// \brief Minimal blocking parallel-for over an index range.
///
/// Parallelism in this library is restricted to embarrassingly parallel
/// loops in which iteration i writes only to slot i of preallocated storage;
/// every reduction afterwards runs serially in a fixed order.  That keeps
/// results bit-identical regardless of the worker count.

#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace mpcqn {

/// Number of workers to use: the MPCQN_THREADS environment variable if set
/// (clamped to at least 1), otherwise the hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("MPCQN_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Calls fn(i) exactly once for every i in [0, n), blocking until done.
/// With threads <= 1 (or a tiny range) the loop runs inline on the caller.
/// fn must confine its writes to per-index slots.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
  const std::size_t t_count =
      std::min<std::size_t>(std::max(threads, 1), n == 0 ? 1 : n);
  if (t_count <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    const std::size_t lo = n * t / t_count;
    const std::size_t hi = n * (t + 1) / t_count;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace mpcqn
