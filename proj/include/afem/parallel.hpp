#pragma once

#include <cstddef>
#include <functional>

namespace afem {

/// Worker count: hardware concurrency, capped by the AFEM_OCP_THREADS environment variable.
unsigned worker_count();

/// Runs body(i) for i in [0, n) split into contiguous chunks over worker_count() threads.
/// Bodies must only write to per-index storage; callers reduce afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace afem
