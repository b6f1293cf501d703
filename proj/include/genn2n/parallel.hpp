#pragma once

#include <cstdint>
#include <functional>

namespace genn2n {

// Worker cap for internal parallelism. Resolution order: set_num_threads()
// (CLI --threads), GENN2N_THREADS env var, hardware concurrency.
int num_threads();
void set_num_threads(int n);

// Splits [0, n) into contiguous chunks, one per worker. Each chunk must
// write disjoint outputs; chunk boundaries depend only on n and the worker
// count, so results are reproducible for a fixed thread setting.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& chunk_fn);

}  // namespace genn2n
