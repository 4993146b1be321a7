#pragma once

#include <cstddef>

namespace curvlab {

/// Worker count: hardware concurrency, capped by the CURVLAB_THREADS
/// environment variable when it holds a positive integer.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Each index
/// runs exactly once; the first exception thrown is rethrown after all workers
/// join.
template <class F>
void parallel_for(std::size_t count, F&& body);

}  // namespace curvlab

#include "curvlab/parallel_impl.hpp"
