#pragma once

#include <cstddef>
#include <functional>

namespace reach {

/// Worker count: REACH_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
unsigned default_thread_count();

/// Calls body(i) for i in [0, count) on up to `threads` workers (0 = default).
/// Indices are claimed dynamically; callers write results into slot i and
/// reduce in index order afterwards so output never depends on scheduling.
/// The first exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace reach
