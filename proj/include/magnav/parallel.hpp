#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace magnav {

/// Runs fn(i) for i in [0, n) across a thread pool. Work per index must be
/// independent and write only to its own slot; results are then identical
/// whatever the thread count. Exceptions from workers are rethrown (first
/// one wins).
inline void parallel_for(int n, const std::function<void(int)>& fn, int n_threads = 0) {
    if (n <= 0) return;
    if (n_threads <= 0) {
        n_threads = static_cast<int>(std::thread::hardware_concurrency());
        if (n_threads <= 0) n_threads = 1;
    }
    n_threads = std::min(n_threads, n);
    if (n_threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }

    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
    const int chunk = (n + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        pool.emplace_back([&, t, lo, hi] {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace magnav
