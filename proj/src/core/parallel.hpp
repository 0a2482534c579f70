#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace trimix {

// Worker cap: TRIMIX_THREADS if set (>=1), else hardware concurrency.
// Read once; the whole process uses one consistent value.
inline int thread_cap() {
    static const int cap = [] {
        if (const char* env = std::getenv("TRIMIX_THREADS")) {
            const int v = std::atoi(env);
            if (v >= 1) return v;
        }
        const unsigned hc = std::thread::hardware_concurrency();
        return hc ? static_cast<int>(hc) : 1;
    }();
    return cap;
}

// Static contiguous partition of [0, n). Each index is processed by exactly
// one worker with the same inner arithmetic regardless of the worker count,
// so results are bitwise independent of TRIMIX_THREADS. Only used for
// embarrassingly parallel work (independent outputs, no shared accumulation).
inline void parallel_for(int64_t n, const std::function<void(int64_t)>& body) {
    const int workers = static_cast<int>(std::min<int64_t>(thread_cap(), n));
    if (workers <= 1) {
        for (int64_t i = 0; i < n; i++) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const int64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; w++) {
        const int64_t lo = w * chunk;
        const int64_t hi = std::min<int64_t>(n, lo + chunk);
        pool.emplace_back([lo, hi, &body] {
            for (int64_t i = lo; i < hi; i++) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace trimix
