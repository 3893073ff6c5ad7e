#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace voltgrid {

// Thread cap: VOLTGRID_THREADS env var, else hardware concurrency.
inline unsigned thread_budget() {
    if (const char* env = std::getenv("VOLTGRID_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

// Runs fn(i) for i in [0, count). Each index writes only its own slot, so the
// result is identical for any thread count. The first exception a worker
// throws is rethrown on the calling thread after the joins.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const unsigned threads =
        static_cast<unsigned>(std::min<std::size_t>(thread_budget(), count == 0 ? 1 : count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < count; i += threads) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace voltgrid
