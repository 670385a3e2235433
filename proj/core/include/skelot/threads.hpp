#pragma once

#include <cstddef>
#include <functional>

namespace skelot {

/// Worker cap: SKELOT_THREADS if set, else hardware concurrency, at least 1.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n). Work is chunked across workers; every index
/// writes only its own slot, so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace skelot
