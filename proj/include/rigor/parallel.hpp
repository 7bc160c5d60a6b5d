#pragma once

// Deterministic fan-out over an index range.  Work items are claimed from an
// atomic counter, results are written by index, and the caller consumes them
// in index order, so the output never depends on thread scheduling.  An
// exception aborts the batch; the one with the smallest index is rethrown.

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace rigor {

template <typename Fn>
void parallel_for(int jobs, int count, Fn&& fn) {
  if (count <= 0) return;
  if (jobs <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  int workers = std::min(jobs, count);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto body = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace rigor
