#pragma once

// Minimal worker pool: runs independent work items and rethrows the first
// failure. Results must be written to per-index slots so output order never
// depends on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qadv {

// QADV_THREADS if set and positive, else the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("QADV_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {
// Set on pool threads so nested loops run serially instead of oversubscribing.
inline thread_local bool inside_pool = false;
}  // namespace detail

template <class F>
void parallel_for(std::size_t n, F&& body) {
  const unsigned workers =
      detail::inside_pool ? 1u : static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    const bool outer = detail::inside_pool;
    detail::inside_pool = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
    detail::inside_pool = outer;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace qadv
