#include "genn2n/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace genn2n {

namespace {

int resolve_default_threads() {
  if (const char* env = std::getenv("GENN2N_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int> g_threads{0};  // 0 = unresolved

}  // namespace

int num_threads() {
  int n = g_threads.load(std::memory_order_relaxed);
  if (n == 0) {
    n = resolve_default_threads();
    g_threads.store(n, std::memory_order_relaxed);
  }
  return n;
}

void set_num_threads(int n) {
  g_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed);
}

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& chunk_fn) {
  if (n <= 0) return;
  const int64_t workers = std::min<int64_t>(num_threads(), n);
  if (workers <= 1) {
    chunk_fn(0, n);
    return;
  }
  // Fork-join per call. Chunk boundaries depend only on n and the worker
  // count, and chunks write disjoint ranges, so output is reproducible.
  const int64_t base = n / workers, rem = n % workers;
  auto bounds = [&](int64_t c) {
    const int64_t lo = c * base + std::min(c, rem);
    return std::pair<int64_t, int64_t>{lo, lo + base + (c < rem ? 1 : 0)};
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(workers - 1));
  for (int64_t c = 1; c < workers; ++c) {
    auto [lo, hi] = bounds(c);
    threads.emplace_back([&chunk_fn, lo, hi] { chunk_fn(lo, hi); });
  }
  auto [lo0, hi0] = bounds(0);
  chunk_fn(lo0, hi0);
  for (auto& t : threads) t.join();
}

}  // namespace genn2n
