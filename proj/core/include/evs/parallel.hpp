#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace evs {

/// Worker cap for data-parallel loops. Defaults to the hardware
/// concurrency; the EVS_THREADS environment variable lowers (or raises)
/// it. Always at least 1.
inline int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("EVS_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) n = cap;
        } catch (...) {
            // unparsable value: keep the hardware default
        }
    }
    return n;
}

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks so
/// results written to preallocated slots are deterministic regardless of
/// the worker count. Falls back to a plain loop for small n or one worker.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    const int workers = std::min<std::size_t>(worker_count(), n) > 0
                            ? static_cast<int>(std::min<std::size_t>(worker_count(), n))
                            : 1;
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const std::size_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace evs
