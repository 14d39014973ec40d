#pragma once

#include <cstddef>
#include <functional>

namespace tosmtl {

// Worker-thread cap. Resolution order: explicit set_num_threads(), then the
// TOSMTL_THREADS environment variable, then 1.
int num_threads();
void set_num_threads(int n);

// Runs fn(i) for i in [0, n). Each index is executed by exactly one worker
// and every reduction stays inside a single index, so results are identical
// for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Chunked variant: fn(begin, end) over disjoint ranges.
void parallel_for_ranges(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace tosmtl
