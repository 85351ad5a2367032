#pragma once

#include <cstddef>
#include <functional>

namespace fraudlab {

// Process-wide cap on worker threads. 0 or 1 means run inline.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(i) for every i in [0, n). Work is split into contiguous blocks,
// one per worker; callers that reduce must write results into per-index
// slots and combine them in index order afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fraudlab
