#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace thinflow {

/// Worker count used by parallel_for; 1 runs inline.
inline std::atomic<int>& thread_count() {
  static std::atomic<int> count{1};
  return count;
}

inline void set_thread_count(int n) { thread_count() = std::max(1, n); }

/// Calls f(i) for i in [0, n). Each index must write only its own output
/// slot; reductions are done by the caller afterwards in index order, so
/// results do not depend on the worker count.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  const auto workers = static_cast<std::size_t>(std::min<long>(thread_count(), static_cast<long>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    try {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) f(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      next = n;
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace thinflow
