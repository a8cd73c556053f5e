#pragma once

// Index-ordered parallel map. Results land in slot k regardless of which
// worker produced them, so reductions done afterwards in index order are
// independent of the thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rsirs {

template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, std::size_t threads, Fn&& fn) {
  std::vector<T> out(n);
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) out[k] = fn(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = n;
  std::exception_ptr err;
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < n; k = next.fetch_add(1)) {
      try {
        out[k] = fn(k);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        // report the failure with the lowest index, as a serial run would
        if (k < err_index) {
          err_index = k;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

/// Runs `map(k)` for k in [0, n) in fixed-size batches and feeds results to
/// `reduce(k, result)` strictly in index order. Memory is bounded by `batch`.
template <class T, class Map, class Reduce>
void ordered_reduce(std::size_t n, std::size_t threads, std::size_t batch, Map&& map, Reduce&& reduce) {
  batch = std::max<std::size_t>(batch, 1);
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t len = std::min(batch, n - start);
    auto results = parallel_map<T>(len, threads, [&](std::size_t j) { return map(start + j); });
    for (std::size_t j = 0; j < len; ++j) reduce(start + j, std::move(results[j]));
  }
}

}  // namespace rsirs
