#pragma once

#include <cstddef>
#include <functional>

namespace onealign {

/// 0 means: ONEALIGN_THREADS if set, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

/// Splits [0, n) into contiguous chunks, one per worker. Each index is
/// processed by exactly one worker, so per-index results do not depend on
/// the thread count.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t begin, std::size_t end)>& fn);

}  // namespace onealign
