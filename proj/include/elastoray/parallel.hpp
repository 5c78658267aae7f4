#pragma once

#include <cstddef>
#include <functional>

namespace elastoray {

// Worker count: ELASTORAY_THREADS when set (clamped to >= 1), otherwise the
// hardware concurrency. Tests may pin it explicitly.
int worker_count();
void set_worker_count(int n);  // n <= 0 restores the environment default

// Runs work(begin, end, block) over fixed-size blocks of [0, n) on the worker
// pool, then calls merge(block) sequentially in block order. Block boundaries
// depend only on n and block_size, so reductions performed in merge produce
// identical floating-point results for every worker count.
void parallel_blocks(size_t n, size_t block_size,
                     const std::function<void(size_t, size_t, size_t)>& work,
                     const std::function<void(size_t)>& merge);

// Plain parallel map over [0, n); item results must go to disjoint slots.
void parallel_for(size_t n, const std::function<void(size_t)>& work);

}  // namespace elastoray
