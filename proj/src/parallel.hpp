#pragma once

#include <cstddef>
#include <functional>

namespace oledmag {

// Resolves a requested worker count: > 0 is taken as is, 0 means the
// OLEDMAG_THREADS environment variable if set, otherwise hardware concurrency.
int resolve_threads(int requested);

// Runs body(i) for i in [0, count) on up to `threads` workers. Work is handed
// out in contiguous chunks; callers must write results by index so that the
// output does not depend on scheduling. The first exception thrown by any
// worker is rethrown on the calling thread.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace oledmag
