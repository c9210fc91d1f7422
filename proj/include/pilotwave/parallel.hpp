#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pilotwave {

inline std::atomic<unsigned>& default_threads() {
  static std::atomic<unsigned> n{0};
  return n;
}

/// Thread count used wherever a caller passes 0 (0 here: hardware concurrency).
inline void set_default_threads(unsigned n) { default_threads() = n; }

/// Resolves a user thread count; 0 means the process default.
inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  if (const unsigned d = default_threads(); d != 0) return d;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Static-chunked parallel loop over [0, n). Each index is processed exactly
/// once and independently, so results do not depend on the thread count.
/// The first exception thrown by any worker is rethrown on the caller.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace pilotwave
