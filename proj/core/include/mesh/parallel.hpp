#pragma once

#include <cstddef>
#include <functional>

namespace mesh {

/// Number of worker threads used by parallel map-reduce helpers. Results never
/// depend on this value; only wall time does.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Calls fn(task) for every task in [0, n_tasks). Tasks may run concurrently;
/// callers write results into per-task slots and reduce in task order.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& fn);

/// Fixed chunk size for row-parallel reductions. Chunk boundaries depend only
/// on the row count, which keeps floating-point sums reproducible.
inline constexpr std::size_t kRowChunk = 4096;

inline std::size_t chunk_count(std::size_t n_rows) {
    return (n_rows + kRowChunk - 1) / kRowChunk;
}

}  // namespace mesh
