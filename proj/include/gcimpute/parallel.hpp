#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gcimpute {

/// Splits index ranges across worker threads. Work items must be independent;
/// results are written to per-index slots so the outcome never depends on
/// the worker count.
class Executor {
 public:
  explicit Executor(unsigned workers = 1) : workers_(std::max(1u, workers)) {}
  unsigned workers() const { return workers_; }

  template <class F>
  void parallel_for(std::size_t n, F&& body) const {
    const auto threads = std::min<std::size_t>(workers_, n);
    if (threads <= 1) {
      for (std::size_t i = 0; i < n; ++i) body(i);
      return;
    }
    std::exception_ptr failure;
    std::size_t failed_index = n;
    std::mutex guard;
    {
      std::vector<std::jthread> pool;
      pool.reserve(threads);
      for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
          for (std::size_t i = w; i < n; i += threads) {
            try {
              body(i);
            } catch (...) {
              std::lock_guard lock(guard);
              // Keep the lowest failing index so errors are deterministic.
              if (i < failed_index) {
                failed_index = i;
                failure = std::current_exception();
              }
              return;
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

 private:
  unsigned workers_;
};

/// Pairwise sum of items[0..n) in a fixed tree order.
template <class T>
T tree_sum(const std::vector<T>& items, std::size_t begin, std::size_t end) {
  if (end - begin == 1) return items[begin];
  const std::size_t mid = begin + (end - begin) / 2;
  return tree_sum(items, begin, mid) + tree_sum(items, mid, end);
}

}  // namespace gcimpute
