#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace scfc {

// Runs fn(0..n-1) across worker threads. Each index is processed exactly
// once; callers get determinism by writing only to slot i from fn(i).
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         unsigned max_threads = 0) {
    if (n == 0) return;
    unsigned threads = max_threads ? max_threads : std::thread::hardware_concurrency();
    if (threads < 2 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace scfc
