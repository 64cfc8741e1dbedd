#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace rap {

// Global worker count. 0 = hardware concurrency. Results are required to be
// byte-identical for any setting: maps write disjoint outputs, reductions go
// through fixed-size chunks combined in chunk order.
void set_threads(int n);
int thread_count();

// Runs body(begin, end) over a partition of [0, n). Safe to call from inside a
// worker (runs inline). Partitioning may depend on the thread count; bodies
// must only write to disjoint per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

inline constexpr std::size_t kReduceChunk = 1024;

std::size_t reduce_chunk_count(std::size_t n);

// Deterministic sum reduction: partials are computed per fixed chunk of
// kReduceChunk indices (in index order within the chunk) and combined in chunk
// order, so the result does not depend on the thread count.
double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& term);

// Chunked map/combine for reductions with vector-valued accumulators.
// map(chunk_index, begin, end) fills its own slot; combine runs sequentially
// in chunk order on the calling thread.
void chunked_reduce(std::size_t n,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& map,
                    const std::function<void(std::size_t)>& combine);

}  // namespace rap
