#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace latnet {

// Runs fn(0..count-1) across up to `threads` workers with a static block
// partition. Callers write results into preallocated per-index slots and
// reduce sequentially afterwards, which keeps outputs independent of the
// thread count. threads <= 1 runs inline.
inline void parallel_for_slots(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  if (threads > count) threads = count;
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    const int lo = static_cast<int>(static_cast<long long>(count) * t / threads);
    const int hi = static_cast<int>(static_cast<long long>(count) * (t + 1) / threads);
    pool.emplace_back([&, t, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace latnet
