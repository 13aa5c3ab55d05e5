#pragma once
#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace scaledreg {

/// Worker count: `requested` if positive, else SCALED_REGRESS_THREADS, else hardware concurrency.
inline unsigned resolve_threads(int requested = 0)
{
    if (requested > 0) return static_cast<unsigned>(requested);
    if (const char* env = std::getenv("SCALED_REGRESS_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Calls f(i) for i in [0, count) on up to `threads` workers. Work is handed
 * out by an atomic counter, so callers must write results into slot i only;
 * the first exception thrown is rethrown after all workers join.
 */
template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& f)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex mu;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first) first = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

} // namespace scaledreg
