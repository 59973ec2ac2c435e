#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace ebcf {

/// Worker cap: EBCF_THREADS environment variable when set, otherwise the
/// hardware concurrency. Always at least 1.
inline int worker_count() {
  if (const char* env = std::getenv("EBCF_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs f(i) for i in [0, n). Each index is visited exactly once; callers
/// write results to preallocated per-index slots so the final reduction
/// order does not depend on the worker count.
template <class F>
void parallel_for(std::int64_t n, F&& f, int workers = 0) {
  if (n <= 0) return;
  if (workers <= 0) workers = worker_count();
  if (workers > n) workers = static_cast<int>(n);
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) f(i);
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto run = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ebcf
