#pragma once

#include <cstddef>
#include <functional>

namespace texec {

/// Worker count: hardware concurrency, capped by TRANSIENT_EXEC_THREADS when set.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Each index is
/// visited exactly once; callers write results into per-index slots so the
/// outcome is independent of scheduling. The first exception thrown by any
/// body is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace texec
