#pragma once

#include <cstddef>
#include <functional>

namespace mfd {

// Worker count: MFD_THREADS if set and positive, otherwise hardware concurrency.
std::size_t worker_count();

// Calls fn(i) for i in [0, n). Each index runs exactly once; the first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mfd
