#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace autoprov {

// Runs fn(i) for i in [0, n) on at most `max_parallel` threads. The first
// exception thrown by any task is rethrown after all tasks finish.
inline void parallel_for(std::size_t n, std::size_t max_parallel,
                         const std::function<void(std::size_t)>& fn) {
  if (max_parallel <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  for (std::size_t base = 0; base < n; base += max_parallel) {
    std::vector<std::jthread> batch;
    for (std::size_t i = base; i < n && i < base + max_parallel; ++i) {
      batch.emplace_back([&, i] {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace autoprov
