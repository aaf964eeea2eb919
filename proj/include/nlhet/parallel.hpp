#pragma once

#include <cstddef>
#include <functional>

namespace nlhet {

// Worker count: NLHET_THREADS if set (>= 1), else hardware concurrency.
unsigned thread_count();

// Runs fn(i) for i in [begin, end) split into contiguous chunks. Each index is
// handled by exactly one worker, so per-index outputs are deterministic.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace nlhet
