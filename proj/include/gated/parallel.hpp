#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gated {

/// Resolves a worker count: positive request wins, else GATED_THREADS from
/// the environment (0 or unset = auto), else hardware concurrency.
inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GATED_THREADS")) {
    int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(row_begin, row_end) over contiguous row blocks. `threads` is a
/// request as in resolve_thread_count. Workers write to disjoint rows only,
/// so results do not depend on the schedule. The first worker exception is
/// rethrown on the calling thread.
inline void parallel_for_rows(int rows, int threads,
                              const std::function<void(int, int)>& fn) {
  threads = std::max(1, std::min(resolve_thread_count(threads), rows));
  if (threads == 1) {
    fn(0, rows);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(threads);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  int chunk = (rows + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    int begin = t * chunk;
    int end = std::min(rows, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&fn, &failure, &failure_mutex, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace gated
