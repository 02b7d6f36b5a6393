#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace posilab {

/// Splits [0, n) into at most `threads` contiguous chunks, runs fn(begin, end)
/// on each, and returns the results in chunk order.
template <class Fn>
auto parallel_map_chunks(int n, int threads, Fn&& fn) {
  using Result = decltype(fn(0, 0));
  threads = std::clamp(threads, 1, std::max(1, n));
  std::vector<Result> results(static_cast<std::size_t>(threads));
  const int chunk = (n + threads - 1) / threads;
  if (threads == 1) {
    results[0] = fn(0, n);
    return results;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    const int begin = std::min(n, t * chunk);
    const int end = std::min(n, begin + chunk);
    pool.emplace_back([&, t, begin, end] { results[static_cast<std::size_t>(t)] = fn(begin, end); });
  }
  for (auto& th : pool) th.join();
  return results;
}

}  // namespace posilab
