#pragma once

#include <cstddef>
#include <functional>

namespace panelid {

/// Worker count: PANEL_ID_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

/// Calls fn(begin, end, worker) on contiguous chunks of [0, n). Chunk boundaries
/// depend only on n and the worker count, so per-index results are schedule-free.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t, unsigned)>& fn);

} // namespace panelid
