#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace stratwave {

// Number of workers used by parallel_for: the STRATWAVE_WORKERS environment
// variable when set (clamped to [1, 64]), otherwise hardware concurrency
// clamped to [1, 8].
inline int worker_count() {
    if (const char* env = std::getenv("STRATWAVE_WORKERS")) {
        int v = std::atoi(env);
        if (v >= 1) return std::min(v, 64);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}

// Runs body(i) for i in [0, n). Each index writes only its own preallocated
// output slot, and there are no cross-index reductions, so results are
// bitwise identical for any worker count or schedule.
template <typename Body>
void parallel_for(long n, Body&& body) {
    if (n <= 0) return;
    int workers = std::min<long>(worker_count(), n);
    if (workers <= 1) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    // Static block partition: thread w handles [w*chunk, min(n, (w+1)*chunk)).
    long chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        long lo = static_cast<long>(w) * chunk;
        long hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (long i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace stratwave
