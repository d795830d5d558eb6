#pragma once

#include <cstddef>
#include <functional>

namespace fracac {

// Worker count: FRACAC_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

// Splits [0, n) into contiguous chunks, one per worker. The body receives
// [begin, end). Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace fracac
