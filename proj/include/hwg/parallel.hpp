#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace hwg {

// Parallelism cap from HWG_THREADS (default 1). Results must be written to
// preallocated per-index slots so scheduling never changes output.
inline int thread_cap() {
    const char* env = std::getenv("HWG_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    if (n < 1) return 1;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw > 0 && n > static_cast<int>(hw)) n = static_cast<int>(hw);
    return n;
}

template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    int threads = thread_cap();
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t per = (count + static_cast<std::size_t>(threads) - 1) / static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
        std::size_t lo = static_cast<std::size_t>(t) * per;
        std::size_t hi = std::min(count, lo + per);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn]() {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace hwg
