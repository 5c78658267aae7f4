#include "elastoray/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace elastoray {

namespace {
int g_override = 0;

int env_workers() {
    if (const char* env = std::getenv("ELASTORAY_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}
}  // namespace

int worker_count() { return g_override > 0 ? g_override : env_workers(); }

void set_worker_count(int n) { g_override = n > 0 ? n : 0; }

void parallel_blocks(size_t n, size_t block_size,
                     const std::function<void(size_t, size_t, size_t)>& work,
                     const std::function<void(size_t)>& merge) {
    if (n == 0) return;
    if (block_size == 0) block_size = 1;
    size_t nblocks = (n + block_size - 1) / block_size;
    int workers = worker_count();

    if (workers <= 1 || nblocks == 1) {
        for (size_t b = 0; b < nblocks; ++b) {
            size_t lo = b * block_size, hi = std::min(n, lo + block_size);
            work(lo, hi, b);
            if (merge) merge(b);
        }
        return;
    }

    std::atomic<size_t> next{0};
    auto runner = [&] {
        for (;;) {
            size_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            size_t lo = b * block_size, hi = std::min(n, lo + block_size);
            work(lo, hi, b);
        }
    };
    std::vector<std::thread> pool;
    int spawn = std::min<size_t>(static_cast<size_t>(workers), nblocks);
    pool.reserve(static_cast<size_t>(spawn));
    for (int w = 0; w < spawn; ++w) pool.emplace_back(runner);
    for (auto& th : pool) th.join();

    if (merge)
        for (size_t b = 0; b < nblocks; ++b) merge(b);
}

void parallel_for(size_t n, const std::function<void(size_t)>& work) {
    parallel_blocks(
        n, 16,
        [&](size_t lo, size_t hi, size_t) {
            for (size_t i = lo; i < hi; ++i) work(i);
        },
        nullptr);
}

}  // namespace elastoray
