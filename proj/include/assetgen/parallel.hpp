#pragma once

#include <cstddef>
#include <functional>

namespace assetgen
{
    // Worker cap shared by every parallel loop. 0 means hardware concurrency.
    void set_thread_count(unsigned count);
    unsigned thread_count();

    // Runs body(i) for i in [0, n). Work is split into contiguous chunks; callers
    // that need deterministic results write into per-index slots and reduce
    // serially afterwards.
    void parallel_for(size_t n, const std::function<void(size_t)>& body);
} // namespace assetgen
