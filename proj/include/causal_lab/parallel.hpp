#pragma once

#include <cstddef>
#include <functional>

namespace causal_lab {

// Number of worker threads: CAUSAL_LAB_WORKERS if set, else hardware
// concurrency, clamped to [1, 64].
int worker_count();

// Runs fn(begin, end) over disjoint index ranges covering [0, n). Ranges are
// assigned by contiguous blocks so per-block results can be concatenated in
// index order; callers own any merging. fn must not throw across threads
// (exceptions are rethrown on the calling thread after join).
void parallel_for_blocks(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace causal_lab
