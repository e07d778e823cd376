#ifndef INHAND_PARALLEL_HPP
#define INHAND_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace inhand {

/// Runs fn(i) for i in [0, n) on up to `threads` workers, in contiguous
/// static chunks. Callers write results into per-index slots only, so the
/// output is identical for any thread count. Below `min_items` the loop runs
/// inline; coarse tasks pass a smaller value.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn, std::size_t min_items = 256) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1 || n < min_items) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace inhand

#endif  // INHAND_PARALLEL_HPP
