#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace ctxf {

// Worker count taken from the CTXF_THREADS environment variable; unset,
// unparsable, or non-positive values mean 1. Read once per process.
int thread_count();

// Splits [0, n) into contiguous ranges and runs body(begin, end) on each,
// using at most thread_count() workers. The split depends only on n and the
// worker count, and callers only use this where ranges write disjoint outputs,
// so results are identical for any CTXF_THREADS value.
template <typename Body>
void parallel_for(std::int64_t n, const Body& body) {
  if (n <= 0) return;
  int workers = thread_count();
  if (workers <= 1 || n == 1) {
    body(static_cast<std::int64_t>(0), n);
    return;
  }
  if (workers > n) workers = static_cast<int>(n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    std::int64_t begin = w * chunk;
    std::int64_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace ctxf
