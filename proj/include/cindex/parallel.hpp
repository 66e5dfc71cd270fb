#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cindex {

inline int default_thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Thread count resolution used by the CLI: the CINDEX_THREADS environment
// variable overrides any flag value; 0 or unset flag means hardware default.
inline int resolve_thread_count(int flag_value) {
    if (const char* env = std::getenv("CINDEX_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return flag_value > 0 ? flag_value : default_thread_count();
}

// Runs fn(i) for i in [0, n). Work is claimed through an atomic counter;
// callers must write results into per-index slots so the output does not
// depend on the schedule. The first exception thrown by any task is
// rethrown on the calling thread after all workers join.
template <class Fn>
void parallel_for(std::size_t n, int n_threads, Fn&& fn) {
    if (n == 0) return;
    n_threads = std::max(1, n_threads);
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(n_threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cindex
