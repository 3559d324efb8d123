#pragma once

#include <cstddef>
#include <functional>

namespace carleman {

/// Worker count: CARLEMAN_LAB_THREADS when set and positive, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for i in [0, n) over contiguous static chunks. Each index is
/// evaluated exactly once, so results written per index are independent of
/// the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace carleman
