#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace covkit {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
/// is visited exactly once; callers write results to per-index slots so the
/// outcome never depends on scheduling. The first exception (lowest index)
/// is rethrown after all workers finish.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  std::mutex mu;
  std::exception_ptr first_error;
  std::size_t first_index = count;

  auto run = [&](std::size_t w) {
    for (std::size_t i = w; i < count; i += workers) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < first_index) {
          first_index = i;
          first_error = std::current_exception();
        }
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace covkit
