#pragma once

#include <cstddef>
#include <functional>

namespace patchwork {

// Process-wide worker count used by every parallel loop in the library.
// 0 selects std::thread::hardware_concurrency().
void set_thread_count(unsigned threads);
unsigned thread_count();

// Runs body(begin, end) over a static partition of [0, count). Chunks are
// contiguous and their boundaries depend only on count and the thread
// count, so per-index results never depend on scheduling.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body);

// Runs body(block) for every block in [0, blocks). Used where each block owns
// its own accumulator and the caller reduces blocks in index order.
void parallel_blocks(std::size_t blocks,
                     const std::function<void(std::size_t)>& body);

}  // namespace patchwork
