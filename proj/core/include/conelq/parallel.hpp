#pragma once

#include <functional>

namespace conelq {

/// Worker count: CONELQ_THREADS if set and positive, else the hardware count.
int worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunking depends
/// only on n and the worker count; if several chunks throw, the exception of
/// the lowest chunk is rethrown.
void parallel_for(int n, const std::function<void(int, int)>& body);

}  // namespace conelq
