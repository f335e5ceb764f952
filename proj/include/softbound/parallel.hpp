#pragma once

#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace softbound {

/// Thread cap from SOFTBOUND_THREADS; 0 or unset means hardware
/// concurrency.
inline std::size_t thread_cap()
{
    std::size_t cap = 0;
    if (const char *env = std::getenv("SOFTBOUND_THREADS")) {
        char *end = nullptr;
        unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0')
            cap = static_cast<std::size_t>(v);
    }
    if (cap == 0) {
        cap = std::thread::hardware_concurrency();
        if (cap == 0)
            cap = 1;
    }
    return cap;
}

/// Runs fn(i) for i in [0, n). Work units must be independent and write
/// only to their own slots; results are then schedule-independent.
template <typename Fn> void parallel_for(std::size_t n, Fn &&fn)
{
    std::size_t threads = std::min(thread_cap(), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([t, n, threads, &fn] {
            for (std::size_t i = t; i < n; i += threads)
                fn(i);
        });
    }
    for (auto &th : pool)
        th.join();
}

} // namespace softbound
