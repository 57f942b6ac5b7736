#pragma once

#include <cstddef>
#include <functional>

namespace frown {

/// Worker count from FROWN_WORKERS, else the hardware concurrency (>= 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, count) across worker_count() threads. Each index
/// runs exactly once; the first exception thrown is rethrown after all
/// workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)> &body);

} // namespace frown
