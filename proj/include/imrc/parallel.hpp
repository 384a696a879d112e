// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace imrc {

// Thread count actually used for `requested`: 0 means hardware concurrency.
inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Splits [0, n) into contiguous chunks, one worker thread per chunk. The
// chunk boundaries depend only on n and the resolved thread count; callers
// that write results by index and reduce sequentially stay deterministic.
template <typename Fn>
void parallel_for(std::size_t n, int n_threads, Fn&& fn) {
  const int threads = std::min<std::size_t>(resolve_thread_count(n_threads), std::max<std::size_t>(n, 1));
  if (threads <= 1 || n == 0) {
    fn(static_cast<std::size_t>(0), n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t begin = static_cast<std::size_t>(t) * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace imrc
