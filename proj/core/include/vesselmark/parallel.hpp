#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vm {

// Worker count used by data-parallel loops. 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

namespace detail {
// Set on worker threads so that nested loops run serially instead of
// multiplying the thread count.
inline bool& in_parallel_region() {
  thread_local bool flag = false;
  return flag;
}
}  // namespace detail

// Runs body(i) for i in [begin, end), split into contiguous chunks across
// worker threads. Each index is visited exactly once, so bodies that only
// write to slot i give results independent of the thread count. The first
// exception thrown by any body is rethrown on the calling thread.
template <typename Body>
void parallel_for(int begin, int end, Body&& body) {
  const int n = end - begin;
  if (n <= 0) return;
  const int workers = detail::in_parallel_region() ? 1 : std::min<int>(static_cast<int>(thread_count()), n);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      detail::in_parallel_region() = true;
      try {
        for (int i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace vm
