#pragma once

// Bounded fan-out over an index range. Private to the library.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace elicit::detail {

/// Runs fn(i) for i in [0, n) on at most `workers` threads. Exceptions are
/// captured per index; the caller decides what is fatal.
template <typename Fn>
std::vector<std::exception_ptr> run_indexed(std::size_t n, std::size_t workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::min(std::max<std::size_t>(workers, 1), n);
  if (workers <= 1) {
    work();
    return errors;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
  threads.clear();  // joins
  return errors;
}

}  // namespace elicit::detail
