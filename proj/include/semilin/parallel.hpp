#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace semilin {

/// Worker count for embarrassingly parallel loops. Output never depends on it:
/// every task writes to its own slot and reductions run in index order.
struct Exec {
  int threads = 1;

  static Exec hardware() {
    return Exec{static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};
  }
};

/// Calls fn(i) for i in [0, n). Work is handed out in chunks; if any call
/// throws, the exception from the smallest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn, std::size_t chunk = 64) {
  if (n == 0) return;
  const auto workers =
      static_cast<std::size_t>(std::clamp<long>(exec.threads, 1, static_cast<long>((n + chunk - 1) / chunk)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = n;
  std::exception_ptr err;
  auto body = [&] {
    for (;;) {
      const std::size_t begin = next.fetch_add(chunk);
      if (begin >= n) return;
      const std::size_t end = std::min(n, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mutex);
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
          break;
        }
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace semilin
