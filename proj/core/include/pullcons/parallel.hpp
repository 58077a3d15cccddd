#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pullcons {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Each index is
/// processed exactly once; callers write results into slot i so the merged
/// output does not depend on scheduling. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::uint64_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (std::uint64_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::jthread> pool;
  const auto n_threads = static_cast<unsigned>(std::min<std::uint64_t>(workers, count));
  pool.reserve(n_threads);
  for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(body);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace pullcons
