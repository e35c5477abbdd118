#pragma once

#include <cstdint>
#include <functional>

namespace erpmvs {

// Runs fn(begin, end) over fixed-size chunks of [first, last). Chunk
// boundaries depend only on `chunk`, never on the thread count, and chunks
// write disjoint outputs, so results are identical for any `threads`.
// threads <= 1 runs inline.
void parallel_for_chunks(std::int64_t first, std::int64_t last, std::int64_t chunk,
                         int threads,
                         const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace erpmvs
