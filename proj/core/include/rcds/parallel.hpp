#pragma once

#include <cstddef>
#include <functional>

namespace rcds {

// Worker count: RCDS_THREADS if set (>= 1), otherwise hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, n) across worker_count() threads. Each index is
// processed exactly once; the first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rcds
