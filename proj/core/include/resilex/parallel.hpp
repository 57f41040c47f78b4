#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace resilex {

/// Environment variable holding the default worker count.
inline constexpr const char* kWorkersEnv = "RESILEX_WORKERS";

/// `requested` when positive, else $RESILEX_WORKERS, else the hardware
/// concurrency (at least 1).
unsigned resolve_workers(unsigned requested = 0);

/// Calls fn(i) for i in [0, n) on up to `workers` threads with a strided
/// split. Results must be written to per-index slots so the outcome does not
/// depend on the worker count. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t w = std::min<std::size_t>(workers, n);
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n; i += w) fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace resilex
