#pragma once

#include <cstddef>
#include <functional>

namespace nflab {

/// Worker count: set_thread_count() if called, else NFLAB_THREADS, else hardware concurrency.
int thread_count();
void set_thread_count(int threads);

/// Runs body(i) for i in [0, n) on static contiguous chunks. Each index is
/// handled by exactly one worker, so results written per index are deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace nflab
