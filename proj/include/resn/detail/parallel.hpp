#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace resn::detail {

/// Calls `fn(i)` for every i in [0, n) on up to `threads` workers. Work items
/// must be independent; the first exception thrown is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
}

/// Worker count from RESN_THREADS, falling back to the processor count.
inline std::size_t thread_count_from_env() {
  std::size_t fallback = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("RESN_THREADS");
  if (env == nullptr || *env == '\0') return fallback;
  try {
    long value = std::stol(env);
    return value > 0 ? static_cast<std::size_t>(value) : fallback;
  } catch (const std::exception&) {
    return fallback;
  }
}

}  // namespace resn::detail
