#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace pseudoflow {

// Worker count for embarrassingly parallel sections (clip generation and
// per-clip evaluation). PSEUDOFLOW_THREADS overrides; defaults to the
// hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("PSEUDOFLOW_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Runs fn(i) for i in [0, n) across worker threads. Exceptions are rethrown
// on the calling thread (first one wins).
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n > 0 ? n : 1);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace pseudoflow
