#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace slelab {

/// Worker cap: SLE_LAB_THREADS when set, else hardware concurrency.
inline int default_thread_count() {
    if (const char* env = std::getenv("SLE_LAB_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/**
 * Runs body(i) for i in [0, n) on up to n_threads workers (0 = default cap).
 * Work items must write only to their own slots; callers reduce afterwards in
 * index order, so results never depend on the schedule.
 */
template <typename Body>
void parallel_for(std::size_t n, int n_threads, Body&& body) {
    int workers = n_threads > 0 ? n_threads : default_thread_count();
    if (workers > static_cast<int>(n)) workers = static_cast<int>(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n) return;
                body(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace slelab
