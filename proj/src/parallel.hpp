#ifndef HYPERMORL_SRC_PARALLEL_HPP_
#define HYPERMORL_SRC_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hypermorl::detail {

// Runs fn(i) for i in [0, n) on up to `workers` threads, contiguous chunks per
// thread. The first exception thrown by any task is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t nw = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
  if (nw == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = n * w / nw; i < n * (w + 1) / nw; ++i) fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace hypermorl::detail

#endif  // HYPERMORL_SRC_PARALLEL_HPP_
